#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shieldroute/guardplan.hpp"
#include "shieldroute/layout.hpp"

namespace shieldroute {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

/// Times are femtoseconds throughout.
struct TdrModel {
  double sigma_fs = 2.6;
  double dielectric_constant = 3.9;
  double rise_time_fs = 100.0;
};

/// Throws Error unless sigma > 0 and D_k > 1.
void validate(const TdrModel& model);

enum class LineModel : std::uint8_t { TransmissionLine, LumpedRc };

/// Transmission line iff rise < 2 * T_pd. Both must be positive.
LineModel model_selector(double rise_time_fs, double tpd_fs);

/// One-way propagation delay of a wire of `length` nm.
double prop_delay_fs(Nm length, double dielectric_constant);
/// Echo time, twice the one-way delay. Accepts zero and negative deltas.
double round_trip_fs(Nm length, double dielectric_constant);
/// Inverse of round_trip_fs, rounded to the nearest nm.
Nm length_from_round_trip(double rt_fs, double dielectric_constant);

/// Worst-case fabricated length error of a wire (both ends): the layer's min spacing.
Nm wc_error(const TechRules& rules, int layer);
/// L_attack > 2 L_wc_error with L_attack = 2 mmp.
bool pv_detectable(const TechRules& rules, int layer);
/// L_attack - 2 L_wc_error.
Nm pv_margin(const TechRules& rules, int layer);

/// Smallest n with z_{(1+c)/2} * sigma * sqrt(2/n) <= delta/2.
int tdr_measurements(double delta_rt_fs, const TdrModel& model, double confidence);

/// Closed-form rates of the two-sample midpoint rule at n samples per arm.
double midpoint_detection_probability(double delta_rt_fs, const TdrModel& model, int n);
double midpoint_false_alarm_probability(double delta_rt_fs, const TdrModel& model, int n);

struct MonteCarloResult {
  int trials = 0;
  int n = 0;
  double detection_rate = 0, detection_se = 0;
  double false_alarm_rate = 0, false_alarm_se = 0;
};

/// Seeded simulation of the midpoint rule; each trial draws from its own
/// counter-derived stream. Needs at least 10^4 trials.
MonteCarloResult monte_carlo_confidence(double delta_rt_fs, const TdrModel& model, int n, int trials,
                                        std::uint64_t seed);

/// Counter-based stream for reproducible per-item randomness.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t state_;
};

/// Mixes a seed with a counter (trial index, guard index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter);

struct GuardMeasurement {
  std::string guard;
  bool applicable = false;
  std::string reason;  // when not applicable
  int n = 0;
  std::vector<double> length_samples_fs;  // echo times off the far terminal
  double mean_round_trip_fs = 0;
  Nm measured_length = 0;
  std::vector<Nm> inter_bend_lengths;  // one per run
  int features = 0;                    // reflections from bends and layer changes
};

struct MeasureOptions {
  int n = 1;
  std::uint64_t seed = 1;
  bool process_variation = true;
};

/// Simulated fabrication plus TDR on the guard as it exists in `layout`.
/// Each end of the fabricated wire is off by a uniform error within half the
/// min spacing of its layer; every echo time gets Gaussian noise.
GuardMeasurement measure_guard(const Layout& layout, const GuardNetPlan& guard, const TdrModel& model,
                               const MeasureOptions& options);

enum class Verdict : std::uint8_t { Clean, Tampered, Inapplicable };
std::string to_string(Verdict v);

struct ChannelResult {
  Verdict verdict = Verdict::Inapplicable;
  double statistic = 0;
  double threshold = 0;
  double confidence = 0;
};

struct GuardDetection {
  std::string guard;
  ChannelResult continuity, coupling, tdr_length, tdr_bends;
};

struct DetectionReport {
  double confidence = 0.95;
  double family_confidence = 0.95;  // per-guard confidence after splitting the error budget
  int n = 0;
  double length_threshold_fs = 0;
  std::vector<GuardDetection> guards;
  ChannelResult continuity, coupling, tdr_length, tdr_bends;

  bool tampered() const;
};

struct DetectOptions {
  TdrModel model;
  double confidence = 0.95;
  double coupling_drop = 0.05;
  std::uint64_t seed = 1;
  bool process_variation = true;
};

/// Runs the continuity, coupling and TDR channels for every guard of the plan.
DetectionReport detect(const GuardPlan& plan, const Layout& layout, const DetectOptions& options = {});

std::string detection_to_json(const DetectionReport& report);

/// Per-layer spacing, pitch, minimal attack edit, detectability and n_min at
/// 95% and 99%, as CSV.
std::string table2_csv(const TechRules& rules, const TdrModel& model = {});

}  // namespace shieldroute
