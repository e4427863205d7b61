#include "shieldroute/tamper.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "json.hpp"
#include "shieldroute/error.hpp"

namespace shieldroute {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void validate(const TdrModel& m) {
  if (!(m.sigma_fs > 0)) throw Error("TDR sigma must be positive");
  if (!(m.dielectric_constant > 1)) throw Error("dielectric constant must exceed 1");
  if (!(m.rise_time_fs > 0)) throw Error("rise time must be positive");
}

LineModel model_selector(double rise_time_fs, double tpd_fs) {
  if (!(rise_time_fs > 0) || !(tpd_fs > 0)) throw Error("rise time and propagation delay must be positive");
  return rise_time_fs < 2.0 * tpd_fs ? LineModel::TransmissionLine : LineModel::LumpedRc;
}

double prop_delay_fs(Nm length, double dk) {
  if (length <= 0) throw Error("propagation delay needs a positive length");
  return static_cast<double>(length) * 1e-9 * std::sqrt(dk) / kSpeedOfLight * 1e15;
}

double round_trip_fs(Nm length, double dk) {
  return 2.0 * static_cast<double>(length) * 1e-9 * std::sqrt(dk) / kSpeedOfLight * 1e15;
}

Nm length_from_round_trip(double rt_fs, double dk) {
  return std::llround(rt_fs * 1e-15 * kSpeedOfLight / (2.0 * std::sqrt(dk)) * 1e9);
}

Nm wc_error(const TechRules& rules, int layer) { return rules.layer(layer).min_spacing; }

bool pv_detectable(const TechRules& rules, int layer) { return pv_margin(rules, layer) > 0; }

Nm pv_margin(const TechRules& rules, int layer) {
  return min_jog_edit(rules, layer) - 2 * wc_error(rules, layer);
}

int tdr_measurements(double delta_rt_fs, const TdrModel& model, double confidence) {
  validate(model);
  if (!(delta_rt_fs > 0)) throw Error("round-trip delta must be positive");
  if (!(confidence > 0.5 && confidence < 1.0)) throw Error("confidence must lie in (0.5, 1)");
  const double z = normal_quantile((1.0 + confidence) / 2.0);
  int n = 1;
  while (z * model.sigma_fs * std::sqrt(2.0 / n) > delta_rt_fs / 2.0) ++n;
  return n;
}

double midpoint_detection_probability(double delta_rt_fs, const TdrModel& model, int n) {
  const double sd = model.sigma_fs * std::sqrt(2.0 / n);
  const double half = delta_rt_fs / 2.0;
  return (1.0 - normal_cdf((half - delta_rt_fs) / sd)) + normal_cdf((-half - delta_rt_fs) / sd);
}

double midpoint_false_alarm_probability(double delta_rt_fs, const TdrModel& model, int n) {
  const double sd = model.sigma_fs * std::sqrt(2.0 / n);
  return 2.0 * (1.0 - normal_cdf(delta_rt_fs / 2.0 / sd));
}

SplitMix64::result_type SplitMix64::operator()() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
  SplitMix64 a(seed);
  SplitMix64 b(a() ^ (counter * 0xD1B54A32D192ED03ULL));
  return b();
}

MonteCarloResult monte_carlo_confidence(double delta_rt_fs, const TdrModel& model, int n, int trials,
                                        std::uint64_t seed) {
  validate(model);
  if (trials < 10000) throw Error("Monte Carlo needs at least 10000 trials");
  if (n < 1) throw Error("measurement count must be at least 1");
  const double half = delta_rt_fs / 2.0;
  int hits = 0, alarms = 0;
  for (int t = 0; t < trials; ++t) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::normal_distribution<double> noise(0.0, model.sigma_fs);
    auto arm_mean = [&](double mu) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += mu + noise(rng);
      return s / n;
    };
    const double golden = arm_mean(0.0);
    const double attacked = arm_mean(delta_rt_fs);
    const double clean = arm_mean(0.0);
    if (std::abs(attacked - golden) > half) ++hits;
    if (std::abs(clean - golden) > half) ++alarms;
  }
  MonteCarloResult r;
  r.trials = trials;
  r.n = n;
  r.detection_rate = static_cast<double>(hits) / trials;
  r.false_alarm_rate = static_cast<double>(alarms) / trials;
  r.detection_se = std::sqrt(r.detection_rate * (1 - r.detection_rate) / trials);
  r.false_alarm_se = std::sqrt(r.false_alarm_rate * (1 - r.false_alarm_rate) / trials);
  return r;
}

GuardMeasurement measure_guard(const Layout& layout, const GuardNetPlan& guard, const TdrModel& model,
                               const MeasureOptions& options) {
  // sigma = 0 is allowed here: it gives noiseless echoes.
  if (model.sigma_fs < 0 || !(model.dielectric_constant > 1) || !(model.rise_time_fs > 0))
    throw Error("invalid TDR model");
  if (options.n < 1) throw Error("measurement count must be at least 1");
  GuardMeasurement m;
  m.guard = guard.name;
  m.n = options.n;
  const RoutedNet* net = layout.find_net(guard.name);
  if (!net) {
    m.reason = "guard is absent (no reflection)";
    return m;
  }
  const auto traced = trace_path(*net, guard.golden.start);
  if (!traced) {
    m.reason = "guard is not a single open wire";
    return m;
  }
  if (guard.golden.length <= 0 ||
      model_selector(model.rise_time_fs, prop_delay_fs(guard.golden.length, model.dielectric_constant)) ==
          LineModel::LumpedRc) {
    m.reason = "lumped regime at this rise time";
    return m;
  }
  m.applicable = true;

  SplitMix64 rng(options.seed);
  double e_start = 0, e_end = 0;
  if (options.process_variation) {
    const auto& rules = layout.rules();
    const double hs = rules.layer(traced->start_layer).min_spacing / 2.0;
    const double he = rules.layer(traced->end_layer).min_spacing / 2.0;
    e_start = std::uniform_real_distribution<double>(-hs, hs)(rng);
    e_end = std::uniform_real_distribution<double>(-he, he)(rng);
  }
  auto echo = [&](double length_nm) {
    return 2.0 * length_nm * 1e-9 * std::sqrt(model.dielectric_constant) / kSpeedOfLight * 1e15;
  };
  std::normal_distribution<double> noise(0.0, model.sigma_fs > 0 ? model.sigma_fs : 1.0);
  auto sample_mean = [&](double length_nm, std::vector<double>* keep) {
    double s = 0;
    for (int i = 0; i < options.n; ++i) {
      const double v = echo(length_nm) + (model.sigma_fs > 0 ? noise(rng) : 0.0);
      if (keep) keep->push_back(v);
      s += v;
    }
    return s / options.n;
  };

  const double fabricated = static_cast<double>(traced->length) + e_start + e_end;
  m.mean_round_trip_fs = sample_mean(fabricated, &m.length_samples_fs);
  m.measured_length = length_from_round_trip(m.mean_round_trip_fs, model.dielectric_constant);
  for (std::size_t k = 0; k < traced->runs.size(); ++k) {
    double run = static_cast<double>(traced->runs[k]);
    if (k == 0) run += e_start;
    if (k + 1 == traced->runs.size()) run += e_end;
    m.inter_bend_lengths.push_back(length_from_round_trip(sample_mean(run, nullptr), model.dielectric_constant));
  }
  m.features = static_cast<int>(traced->features.size());
  return m;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Clean: return "clean";
    case Verdict::Tampered: return "tampered";
    case Verdict::Inapplicable: return "inapplicable";
  }
  return "?";
}

bool DetectionReport::tampered() const {
  for (const auto* c : {&continuity, &coupling, &tdr_length, &tdr_bends})
    if (c->verdict == Verdict::Tampered) return true;
  return false;
}

namespace {

bool connected(const TechRules& rules, const RoutedNet& n) {
  const std::size_t m = n.segments.size();
  if (m == 0) return false;
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (n.segments[i].layer == n.segments[j].layer && touches(n.segments[i].rect(), n.segments[j].rect()))
        unite(i, j);
  for (const auto& v : n.vias) {
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& s = n.segments[i];
      if (s.layer != v.lower_layer && s.layer != v.lower_layer + 1) continue;
      if (!touches(s.rect(), via_pad(rules, v, s.layer))) continue;
      if (first) unite(*first, i);
      else first = i;
    }
  }
  const std::size_t root = find(0);
  for (std::size_t i = 1; i < m; ++i)
    if (find(i) != root) return false;
  return true;
}

ChannelResult aggregate(const std::vector<const ChannelResult*>& parts) {
  ChannelResult out;
  bool any_applicable = false;
  for (const auto* c : parts) {
    if (c->verdict == Verdict::Inapplicable) continue;
    if (!any_applicable || c->statistic > out.statistic) out.statistic = c->statistic;
    out.threshold = c->threshold;
    out.confidence = c->confidence;
    if (!any_applicable) out.verdict = Verdict::Clean;
    any_applicable = true;
    if (c->verdict == Verdict::Tampered) out.verdict = Verdict::Tampered;
  }
  return out;
}

}  // namespace

DetectionReport detect(const GuardPlan& plan, const Layout& layout, const DetectOptions& options) {
  validate(options.model);
  if (!(options.confidence > 0.5 && options.confidence < 1.0)) throw Error("confidence must lie in (0.5, 1)");
  const auto& rules = layout.rules();
  DetectionReport rep;
  rep.confidence = options.confidence;
  const double k = static_cast<double>(std::max<std::size_t>(1, plan.guards.size()));
  rep.family_confidence = 1.0 - (1.0 - options.confidence) / k;
  Nm edit = min_jog_edit(rules, 1);
  for (int l = 2; l <= rules.layer_count(); ++l) edit = std::min(edit, min_jog_edit(rules, l));
  const double delta = round_trip_fs(edit, options.model.dielectric_constant);
  rep.n = tdr_measurements(delta, options.model, rep.family_confidence);
  rep.length_threshold_fs = delta / 2.0;

  for (std::size_t gi = 0; gi < plan.guards.size(); ++gi) {
    const auto& g = plan.guards[gi];
    GuardDetection d;
    d.guard = g.name;
    const RoutedNet* net = layout.find_net(g.name);

    const bool whole = net && connected(rules, *net);
    d.continuity = {whole ? Verdict::Clean : Verdict::Tampered, whole ? 0.0 : 1.0, 0.5, 1.0};

    Nm designed = 0, present = 0;
    for (const auto& [target, len] : g.designed_coupling) {
      designed += len;
      const RoutedNet* tn = layout.find_net(target);
      if (net && tn) present += coupling_length(rules, *net, *tn);
    }
    if (designed > 0) {
      const double drop = static_cast<double>(designed - present) / static_cast<double>(designed);
      d.coupling = {drop > options.coupling_drop ? Verdict::Tampered : Verdict::Clean, drop, options.coupling_drop, 1.0};
    }

    const auto m = measure_guard(layout, g, options.model,
                                 {rep.n, derive_seed(options.seed, gi), options.process_variation});
    if (m.applicable) {
      const double dev = std::abs(m.mean_round_trip_fs - round_trip_fs(g.golden.length, options.model.dielectric_constant));
      d.tdr_length = {dev > rep.length_threshold_fs ? Verdict::Tampered : Verdict::Clean, dev, rep.length_threshold_fs,
                      rep.family_confidence};
      const double db = std::abs(m.features - static_cast<double>(g.golden.features.size()));
      d.tdr_bends = {db > 0.5 ? Verdict::Tampered : Verdict::Clean, db, 0.5, 1.0};
    }
    rep.guards.push_back(std::move(d));
  }
  auto collect = [&](ChannelResult GuardDetection::*field) {
    std::vector<const ChannelResult*> parts;
    for (const auto& d : rep.guards) parts.push_back(&(d.*field));
    return aggregate(parts);
  };
  rep.continuity = collect(&GuardDetection::continuity);
  rep.coupling = collect(&GuardDetection::coupling);
  rep.tdr_length = collect(&GuardDetection::tdr_length);
  rep.tdr_bends = collect(&GuardDetection::tdr_bends);
  return rep;
}

std::string detection_to_json(const DetectionReport& r) {
  using nlohmann::ordered_json;
  auto channel = [](const ChannelResult& c) {
    ordered_json j;
    j["verdict"] = to_string(c.verdict);
    j["statistic"] = c.statistic;
    j["threshold"] = c.threshold;
    j["confidence"] = c.confidence;
    return j;
  };
  ordered_json j;
  j["verdict"] = r.tampered() ? "tampered" : "clean";
  j["confidence"] = r.confidence;
  j["family_confidence"] = r.family_confidence;
  j["measurements"] = r.n;
  j["length_threshold_fs"] = r.length_threshold_fs;
  ordered_json ch;
  ch["continuity"] = channel(r.continuity);
  ch["coupling"] = channel(r.coupling);
  ch["tdr_length"] = channel(r.tdr_length);
  ch["tdr_bends"] = channel(r.tdr_bends);
  j["channels"] = ch;
  ordered_json gs = ordered_json::array();
  for (const auto& d : r.guards) {
    ordered_json g;
    g["guard"] = d.guard;
    g["continuity"] = channel(d.continuity);
    g["coupling"] = channel(d.coupling);
    g["tdr_length"] = channel(d.tdr_length);
    g["tdr_bends"] = channel(d.tdr_bends);
    gs.push_back(g);
  }
  j["guards"] = gs;
  return j.dump(2) + "\n";
}

std::string table2_csv(const TechRules& rules, const TdrModel& model) {
  std::ostringstream out;
  out << "layer,min_spacing_um,mmp_um,min_attack_edit_um,detectable,n_min_95,n_min_99\n";
  for (int l = 1; l <= rules.layer_count(); ++l) {
    const auto& L = rules.layer(l);
    const double delta = round_trip_fs(min_jog_edit(rules, l), model.dielectric_constant);
    out << l << ',' << format_um(L.min_spacing) << ',' << format_um(L.mmp) << ',' << format_um(min_jog_edit(rules, l))
        << ',' << (pv_detectable(rules, l) ? "true" : "false") << ',' << tdr_measurements(delta, model, 0.95) << ','
        << tdr_measurements(delta, model, 0.99) << '\n';
  }
  return out.str();
}

}  // namespace shieldroute
