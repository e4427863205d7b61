#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "shieldroute/bypass.hpp"
#include "shieldroute/error.hpp"
#include "shieldroute/tamper.hpp"
#include "test_support.hpp"

using namespace shieldroute;
using namespace testsupport;

namespace {

PlannedLayout guarded(int layer, bool horizontal, GuardArchitecture arch, Nm length = 10080) {
  auto rules = bundled_tech();
  Layout l(rules);
  const Nm track = track_position(*rules, layer, 30000 / rules->layer(layer).mmp);
  const Point a = horizontal ? Point{20160, track} : Point{track, 20160};
  const Point b = horizontal ? Point{20160 + length, track} : Point{track, 20160 + length};
  l.add_segment(wire(*rules, "secure_x", layer, a, b));
  return plan_guards(l, scan_exposure(l, {"secure_x"}), {arch});
}

JogSite site_on(const std::vector<JogSite>& sites, int guard_layer) {
  for (const auto& s : sites)
    if (s.guard_layer == guard_layer) return s;
  throw std::runtime_error("no jog site on layer " + std::to_string(guard_layer));
}

double rt_of_edit(const TechRules& r, int layer) { return round_trip_fs(2 * r.layer(layer).mmp, 3.9); }

}  // namespace

TEST(Table2, MatchesIndependentOracle) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string got = table2_csv(*bundled_tech());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(got, slurp(std::string(SHIELDROUTE_DATA_DIR) + "/../tests/golden/table2.csv"));
  EXPECT_LT(secs, 1.0);
}

TEST(ModelSelector, Examples) {
  EXPECT_EQ(model_selector(1000, prop_delay_fs(100000, 3.9)), LineModel::TransmissionLine);
  EXPECT_EQ(model_selector(1000, prop_delay_fs(10000, 3.9)), LineModel::LumpedRc);
  EXPECT_EQ(model_selector(1000, 500), LineModel::LumpedRc);
  EXPECT_EQ(model_selector(999.999, 500), LineModel::TransmissionLine);
  EXPECT_THROW(model_selector(0, 500), Error);
  EXPECT_THROW(model_selector(100, -1), Error);
}

TEST(PropDelay, Examples) {
  EXPECT_NEAR(prop_delay_fs(100000, 3.9), 658.74, 0.01);
  EXPECT_NEAR(prop_delay_fs(280, 3.9), 1.844, 0.001);
  EXPECT_NEAR(round_trip_fs(280, 3.9), 3.689, 0.001);
  EXPECT_DOUBLE_EQ(prop_delay_fs(2000, 3.9), 2 * prop_delay_fs(1000, 3.9));
  EXPECT_THROW(prop_delay_fs(0, 3.9), Error);
  EXPECT_DOUBLE_EQ(round_trip_fs(0, 3.9), 0.0);
  EXPECT_DOUBLE_EQ(round_trip_fs(-280, 3.9), -round_trip_fs(280, 3.9));
  for (Nm len : {1, 280, 12345, 100000, 9999999}) EXPECT_EQ(length_from_round_trip(round_trip_fs(len, 3.9), 3.9), len);
}

TEST(WcError, Examples) {
  const auto& r = *bundled_tech();
  EXPECT_EQ(wc_error(r, 1), 70);
  EXPECT_EQ(wc_error(r, 10), 2000);
  EXPECT_EQ(wc_error(r, 6), 140);
  EXPECT_THROW(wc_error(r, 11), LookupError);
}

TEST(PvDetectable, BundledLayersAndSyntheticBoundary) {
  const auto& r = *bundled_tech();
  for (int l = 1; l <= r.layer_count(); ++l) {
    EXPECT_TRUE(pv_detectable(r, l)) << l;
    EXPECT_EQ(pv_margin(r, l), 2 * (r.layer(l).mmp - r.layer(l).min_spacing)) << l;
    EXPECT_GT(pv_margin(r, l), 0);
  }
  TechRules synth = r;
  synth.layers[0].mmp = synth.layers[0].min_spacing;
  EXPECT_FALSE(pv_detectable(synth, 1));
  EXPECT_EQ(pv_margin(synth, 1), 0);
  synth.layers[0].mmp = synth.layers[0].min_spacing + 1;
  EXPECT_TRUE(pv_detectable(synth, 1));
  EXPECT_THROW(pv_detectable(r, 0), LookupError);
}

TEST(TdrMeasurements, ClosedFormExamples) {
  const auto& r = *bundled_tech();
  const TdrModel m;
  for (int l : {1, 2, 3}) {
    EXPECT_EQ(tdr_measurements(rt_of_edit(r, l), m, 0.95), 16);
    EXPECT_EQ(tdr_measurements(rt_of_edit(r, l), m, 0.99), 27);
  }
  EXPECT_NEAR(rt_of_edit(r, 10), 105.4, 0.05);
  EXPECT_EQ(tdr_measurements(rt_of_edit(r, 10), m, 0.95), 1);
  EXPECT_EQ(tdr_measurements(rt_of_edit(r, 10), m, 0.99), 1);
  EXPECT_EQ(tdr_measurements(1e12, m, 0.99), 1);
  // Within a factor of two of the published 14 and 24.
  EXPECT_LE(16, 2 * 14);
  EXPECT_LE(27, 2 * 24);
}

TEST(TdrMeasurements, RejectsBadInput) {
  const TdrModel m;
  EXPECT_THROW(tdr_measurements(0, m, 0.95), Error);
  EXPECT_THROW(tdr_measurements(-1, m, 0.95), Error);
  EXPECT_THROW(tdr_measurements(3.7, m, 0.5), Error);
  EXPECT_THROW(tdr_measurements(3.7, m, 1.0), Error);
  TdrModel bad;
  bad.sigma_fs = 0;
  EXPECT_THROW(tdr_measurements(3.7, bad, 0.95), Error);
  bad = {};
  bad.dielectric_constant = 1.0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(TdrMeasurements, Monotone) {
  TdrModel m;
  int prev = std::numeric_limits<int>::max();
  for (double d = 0.5; d < 200; d *= 1.3) {
    const int n = tdr_measurements(d, m, 0.95);
    EXPECT_LE(n, prev);
    prev = n;
    EXPECT_LE(n, tdr_measurements(d, m, 0.99));
    m.sigma_fs = 3.5;
    EXPECT_LE(n, tdr_measurements(d, m, 0.95));
    m.sigma_fs = 2.6;
  }
  // Across the bundled layers, bigger edits never need more samples.
  const auto& r = *bundled_tech();
  for (int l = 1; l < r.layer_count(); ++l)
    EXPECT_GE(tdr_measurements(rt_of_edit(r, l), m, 0.95), tdr_measurements(rt_of_edit(r, l + 1), m, 0.95));
}

TEST(MonteCarlo, AgreesWithClosedForm) {
  const TdrModel m;
  const double d = round_trip_fs(280, 3.9);
  for (double conf : {0.95, 0.99}) {
    const int n = tdr_measurements(d, m, conf);
    const auto mc = monte_carlo_confidence(d, m, n, 100000, 11);
    EXPECT_NEAR(mc.detection_rate, midpoint_detection_probability(d, m, n), 0.02);
    EXPECT_NEAR(mc.false_alarm_rate, midpoint_false_alarm_probability(d, m, n), 0.02);
    EXPECT_GE(mc.detection_rate, conf - 0.02);
    EXPECT_GT(mc.detection_se, 0);
    EXPECT_EQ(mc.trials, 100000);
    EXPECT_EQ(mc.n, n);
  }
}

TEST(MonteCarlo, NullCaseAndMonotoneInN) {
  const TdrModel m;
  const auto null = monte_carlo_confidence(0.0, m, 16, 20000, 3);
  EXPECT_NEAR(null.detection_rate, null.false_alarm_rate, 0.02);
  const double d = round_trip_fs(280, 3.9);
  const auto at = monte_carlo_confidence(d, m, 16, 20000, 3);
  const auto more = monte_carlo_confidence(d, m, 64, 20000, 3);
  EXPECT_GT(more.detection_rate, at.detection_rate);
}

TEST(MonteCarlo, SeededAndBounded) {
  const TdrModel m;
  const auto a = monte_carlo_confidence(3.689, m, 16, 10000, 42);
  const auto b = monte_carlo_confidence(3.689, m, 16, 10000, 42);
  EXPECT_EQ(a.detection_rate, b.detection_rate);
  EXPECT_EQ(a.false_alarm_rate, b.false_alarm_rate);
  EXPECT_THROW(monte_carlo_confidence(3.689, m, 16, 9999, 42), Error);
}

TEST(SplitMix64, ReferenceSequence) {
  SplitMix64 g(1234567);
  EXPECT_EQ(g(), 6457827717110365317ull);
  EXPECT_EQ(g(), 3203168211198807973ull);
  EXPECT_EQ(g(), 9817491932198370423ull);
  EXPECT_EQ(g(), 4593380528125082431ull);
  EXPECT_EQ(g(), 16408922859458223821ull);
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(MeasureGuard, ExactWithoutNoise) {
  for (auto arch : {GuardArchitecture::FullyDisjoint, GuardArchitecture::FullyConnected}) {
    const auto p = guarded(3, true, arch, 100800);
    TdrModel m;
    m.sigma_fs = 1e-300;
    for (const auto& g : p.plan.guards) {
      MeasureOptions o;
      o.n = 5;
      o.process_variation = false;
      const auto meas = measure_guard(p.layout, g, m, o);
      if (!meas.applicable) continue;
      EXPECT_EQ(meas.measured_length, g.golden.length) << g.name;
      EXPECT_EQ(meas.inter_bend_lengths, g.golden.runs) << g.name;
      EXPECT_EQ(meas.features, static_cast<int>(g.golden.features.size()));
      EXPECT_EQ(meas.length_samples_fs.size(), 5u);
    }
  }
}

TEST(MeasureGuard, UnmodifiedLongGuardWithinBound) {
  const auto p = guarded(3, true, GuardArchitecture::FullyConnected, 100800);
  const auto& g = p.plan.guards[0];
  const TdrModel m;
  const int n = 27;
  const auto& r = p.layout.rules();
  Nm wc = 0;
  for (const auto& s : g.geometry.segments) wc = std::max(wc, wc_error(r, s.layer));
  const double bound = static_cast<double>(wc) + 3 * m.sigma_fs * 1e-15 * kSpeedOfLight / std::sqrt(3.9) / std::sqrt(n) * 1e9;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto meas = measure_guard(p.layout, g, m, {n, seed, true});
    ASSERT_TRUE(meas.applicable);
    EXPECT_LE(std::abs(static_cast<double>(meas.measured_length - g.golden.length)), bound) << seed;
  }
}

TEST(MeasureGuard, LayerOneJogShowsUpNearTwoPitches) {
  const auto p = guarded(2, false, GuardArchitecture::PartiallyConnected, 100800);
  const auto s = site_on(jog_sites(p.layout, p.plan), 1);
  const auto res = jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::Lengthening, 1);
  const auto* g = p.plan.find(s.guard);
  ASSERT_TRUE(g);
  double sum = 0;
  const int runs = 300;
  for (int seed = 1; seed <= runs; ++seed) {
    const auto meas = measure_guard(res.layout, *g, TdrModel{}, {27, static_cast<std::uint64_t>(seed), true});
    ASSERT_TRUE(meas.applicable);
    sum += static_cast<double>(meas.measured_length - g->golden.length);
  }
  EXPECT_NEAR(sum / runs, 280.0, 15.0);
}

TEST(MeasureGuard, DeletedGuardIsInapplicable) {
  const auto p = guarded(3, true, GuardArchitecture::FullyDisjoint);
  const auto& g = p.plan.guards[0];
  const auto res = delete_attack(p.layout, g.name);
  const auto meas = measure_guard(res.layout, g, TdrModel{}, {});
  EXPECT_FALSE(meas.applicable);
  EXPECT_FALSE(meas.reason.empty());
}

TEST(MeasureGuard, ShortGuardIsLumped) {
  const auto p = guarded(3, true, GuardArchitecture::FullyDisjoint, 1400);
  TdrModel slow;
  slow.rise_time_fs = 1e6;
  for (const auto& g : p.plan.guards) {
    const auto meas = measure_guard(p.layout, g, slow, {});
    EXPECT_FALSE(meas.applicable);
  }
}

TEST(Detect, EachAttackTripsItsChannel) {
  const auto p = guarded(3, true, GuardArchitecture::FullyConnected, 20160);
  const auto& g = p.plan.guards[0];
  const auto clean = detect(p.plan, p.layout);
  EXPECT_EQ(clean.continuity.verdict, Verdict::Clean);
  EXPECT_EQ(clean.coupling.verdict, Verdict::Clean);
  EXPECT_EQ(clean.n, 16);

  EXPECT_EQ(detect(p.plan, delete_attack(p.layout, g.name).layout).continuity.verdict, Verdict::Tampered);

  const auto t = find_move(p.layout, {g.name}, 10);
  ASSERT_TRUE(t);
  const auto moved = detect(p.plan, move_attack(p.layout, {g.name}, *t).layout);
  EXPECT_EQ(moved.coupling.verdict, Verdict::Tampered);
  EXPECT_EQ(moved.continuity.verdict, Verdict::Clean);

  const auto s = site_on(jog_sites(p.layout, p.plan), 4);
  const auto len = detect(p.plan, jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::Lengthening).layout);
  EXPECT_EQ(len.tdr_length.verdict, Verdict::Tampered);
  const auto bends =
      detect(p.plan, jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::BendPreserving).layout);
  EXPECT_EQ(bends.tdr_bends.verdict, Verdict::Tampered);
  EXPECT_TRUE(bends.tampered());
}

TEST(Detect, JsonIsStable) {
  const auto p = guarded(3, true, GuardArchitecture::FullyConnected);
  const auto a = detection_to_json(detect(p.plan, p.layout));
  EXPECT_EQ(a, detection_to_json(detect(p.plan, p.layout)));
  EXPECT_NE(a.find("\"continuity\""), std::string::npos);
  EXPECT_NE(a.find("\"tdr_bends\""), std::string::npos);
}
