#include <gtest/gtest.h>

#include <random>

#include "shieldroute/error.hpp"
#include "shieldroute/exposure.hpp"
#include "shieldroute/guardplan.hpp"
#include "test_support.hpp"

using namespace testsupport;

namespace {

std::set<std::string> all_nets(const Layout& lay) {
  std::set<std::string> s;
  for (const auto& [n, net] : lay.nets())
    if (!net.segments.empty()) s.insert(n);
  return s;
}

// Longest connected piece of the symmetric difference of two interval sets.
// Endpoints that agree within one voxel leave only pieces of at most a voxel.
Nm worst_disagreement(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Nm> cuts;
  for (const auto* v : {&a, &b})
    for (const auto& iv : *v) {
      cuts.push_back(iv.lo);
      cuts.push_back(iv.hi);
    }
  std::sort(cuts.begin(), cuts.end());
  auto in = [](const std::vector<Interval>& v, Nm x) {
    for (const auto& iv : v)
      if (iv.lo <= x && x < iv.hi) return true;
    return false;
  };
  Nm worst = 0, run = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i] == cuts[i + 1]) continue;
    if (in(a, cuts[i]) != in(b, cuts[i])) {
      run += cuts[i + 1] - cuts[i];
      worst = std::max(worst, run);
    } else {
      run = 0;
    }
  }
  return worst;
}

::testing::AssertionResult agree(const ExposureReport& fast, const ExposureReport& slow, Nm tol) {
  if (fast.nets.size() != slow.nets.size()) return ::testing::AssertionFailure() << "net count differs";
  for (const auto& [name, ne] : fast.nets) {
    const auto& other = slow.nets.at(name);
    if (ne.segments.size() != other.segments.size()) return ::testing::AssertionFailure() << name << " segments";
    for (std::size_t k = 0; k < ne.segments.size(); ++k) {
      for (Face f : kAllFaces) {
        const auto& a = ne.segments[k].open(f);
        const auto& b = other.segments[k].open(f);
        if (is_end_face(f) ? a != b : worst_disagreement(a, b) > tol)
          return ::testing::AssertionFailure() << name << " seg " << k << ' ' << face_name(f) << " differs by "
                                               << worst_disagreement(a, b) << " nm";
      }
    }
  }
  return ::testing::AssertionSuccess();
}

bool contained(const std::vector<Interval>& inner, const std::vector<Interval>& outer) {
  for (const auto& iv : inner) {
    bool ok = false;
    for (const auto& o : outer) ok = ok || (o.lo <= iv.lo && iv.hi <= o.hi);
    if (!ok) return false;
  }
  return true;
}

Layout single_target(Nm len = 10000) {
  auto rules = bundled_tech();
  Layout lay(rules);
  lay.nets()["t"];
  lay.add_segment(wire(*rules, "t", 3, {5000, 2800}, {5000 + len, 2800}));
  return lay;
}

}  // namespace

TEST(Exposure, IsolatedSegmentFullyOpen) {
  const auto lay = single_target();
  const auto rep = scan_exposure(lay, {"t"});
  const auto& se = rep.nets.at("t").segments.at(0);
  for (Face f : {Face::LateralLow, Face::LateralHigh, Face::Top, Face::Bottom}) {
    ASSERT_EQ(se.open(f).size(), 1u);
    EXPECT_EQ(se.open(f)[0], (Interval{5000, 15000}));
  }
  EXPECT_EQ(se.open(Face::EndLow), (std::vector<Interval>{{5000, 5001}}));
  EXPECT_EQ(se.open(Face::EndHigh), (std::vector<Interval>{{14999, 15000}}));
  EXPECT_DOUBLE_EQ(rep.blocked_fraction(), 0.0);
}

TEST(Exposure, ParallelWireAtMinSpacingBlocksOneLateralFace) {
  auto lay = single_target();
  const auto& r = lay.rules();
  lay.nets()["f"];
  // Centerline two pitches below: edge gap 0.21 um. One pitch below: edge gap 0.07 = min spacing.
  lay.add_segment(wire(r, "f", 3, {5000, 2800 - 140}, {15000, 2800 - 140}));
  const auto rep = scan_exposure(lay, {"t"});
  const auto& se = rep.nets.at("t").segments.at(0);
  EXPECT_TRUE(se.open(Face::LateralLow).empty());
  EXPECT_EQ(se.open(Face::LateralHigh), (std::vector<Interval>{{5000, 15000}}));
  EXPECT_EQ(se.open(Face::Top), (std::vector<Interval>{{5000, 15000}}));
  EXPECT_EQ(se.open(Face::Bottom), (std::vector<Interval>{{5000, 15000}}));
  EXPECT_TRUE(agree(rep, voxel_oracle(lay, {"t"}, 10), 10));
}

TEST(Exposure, WireBeyondMinSpacingDoesNotBlock) {
  auto lay = single_target();
  lay.nets()["f"];
  lay.add_segment(wire(lay.rules(), "f", 3, {5000, 2800 - 280}, {15000, 2800 - 280}));
  const auto rep = scan_exposure(lay, {"t"});
  EXPECT_EQ(rep.nets.at("t").segments[0].open(Face::LateralLow), (std::vector<Interval>{{5000, 15000}}));
}

TEST(Exposure, PartialBlockerSplitsInterval) {
  auto lay = single_target();
  lay.nets()["f"];
  // Layer-4 crossing wire over the middle: blocks the top face around x = 10 um.
  lay.add_segment(wire(lay.rules(), "f", 4, {9880, 0}, {9880, 6000}));
  const auto rep = scan_exposure(lay, {"t"});
  const auto& top = rep.nets.at("t").segments[0].open(Face::Top);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].lo, 5000);
  EXPECT_EQ(top[1].hi, 15000);
  EXPECT_LT(top[0].hi, 9880);
  EXPECT_GT(top[1].lo, 9880);
  EXPECT_TRUE(agree(rep, voxel_oracle(lay, {"t"}, 10), 10));
}

TEST(Exposure, TopLayerHasNothingAbove) {
  auto rules = bundled_tech();
  Layout lay(rules);
  lay.nets()["t"];
  lay.add_segment(wire(*rules, "t", 10, {8000, 0}, {8000, 40000}));
  const auto rep = scan_exposure(lay, {"t"});
  EXPECT_EQ(rep.nets.at("t").segments[0].open(Face::Top), (std::vector<Interval>{{0, 40000}}));
}

TEST(Exposure, DevicePlacementsBlockLayerOneBottom) {
  auto rules = bundled_tech();
  Layout lay(rules);
  lay.nets()["t"];
  lay.add_segment(wire(*rules, "t", 1, {0, 700}, {2800, 700}));
  Placement p;
  p.name = "c";
  p.cols = 20;
  lay.placements().emplace("c", p);
  const auto rep = scan_exposure(lay, {"t"});
  EXPECT_TRUE(rep.nets.at("t").segments[0].open(Face::Bottom).empty());
  EXPECT_TRUE(agree(rep, voxel_oracle(lay, {"t"}, 10), 10));
}

TEST(Exposure, GuardedSegmentFullyBlocked) {
  const auto lay = single_target();
  const auto rep = scan_exposure(lay, {"t"});
  for (auto arch : {GuardArchitecture::FullyDisjoint, GuardArchitecture::PartiallyConnected,
                    GuardArchitecture::FullyConnected}) {
    const auto planned = plan_guards(lay, rep, {arch});
    const auto after = scan_exposure(planned.layout, {"t"});
    EXPECT_DOUBLE_EQ(after.blocked_fraction(), 1.0) << to_string(arch);
    EXPECT_TRUE(after.fully_blocked());
  }
}

TEST(Exposure, UnroutedTargetIsError) {
  EXPECT_THROW(scan_exposure(single_target(), {"ghost"}), Error);
}

TEST(Exposure, CoarseVoxelRejected) {
  EXPECT_THROW(voxel_oracle(single_target(), {"t"}, 20), Error);
  EXPECT_THROW(voxel_oracle(single_target(), {"t"}, 15), Error);
}

TEST(Exposure, EmptyLayoutOracleMatches) {
  const auto lay = single_target();
  EXPECT_TRUE(agree(scan_exposure(lay, {"t"}), voxel_oracle(lay, {"t"}, 10), 0));
  const auto none = scan_exposure(Layout(bundled_tech()), {});
  EXPECT_TRUE(none.nets.empty());
  EXPECT_DOUBLE_EQ(none.blocked_fraction(), 1.0);
}

TEST(Exposure, IntervalsSortedDisjointInsideSegment) {
  auto rules = bundled_tech();
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    RandomLayoutOptions o;
    o.nets = 40;
    o.extent = 5000;
    const auto lay = random_layout(rules, seed, o);
    const auto rep = scan_exposure(lay, all_nets(lay));
    for (const auto& [n, ne] : rep.nets) {
      EXPECT_GE(ne.blocked_fraction(), 0.0);
      EXPECT_LE(ne.blocked_fraction(), 1.0);
      for (const auto& se : ne.segments)
        for (Face f : kAllFaces) {
          Nm prev = se.lo - 1;
          for (const auto& iv : se.open(f)) {
            EXPECT_LT(iv.lo, iv.hi);
            EXPECT_GT(iv.lo, prev);
            EXPECT_GE(iv.lo, se.lo);
            EXPECT_LE(iv.hi, se.hi);
            prev = iv.hi;
          }
        }
    }
  }
}

TEST(Exposure, MatchesVoxelOracleOnRandomLayouts) {
  auto rules = bundled_tech();
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 220; ++seed) {
    RandomLayoutOptions o;
    o.nets = 40;
    o.max_segments = 3;
    o.extent = 5000;
    o.placements = static_cast<int>(seed % 4);
    const auto lay = random_layout(rules, 1000 + seed, o);
    // Every fourth net is a target.
    std::set<std::string> targets;
    for (const auto& [n, net] : lay.nets())
      if (!net.segments.empty() && std::stoi(n.substr(1)) % 4 == 0) targets.insert(n);
    ASSERT_TRUE(agree(scan_exposure(lay, targets), voxel_oracle(lay, targets, 10), 10)) << "seed " << seed;
    ++compared;
  }
  EXPECT_GE(compared, 200);
}

TEST(Exposure, MatchesVoxelOracleOnTinyFixture) {
  const auto lay = read_layout(slurp(data_path("tiny.layout")), bundled_tech());
  const auto nl = parse_netlist(slurp(data_path("tiny.net")), NetlistFormat::Native);
  const auto targets = expand_fanin(nl, find_roots(nl), 2).targets;
  EXPECT_LE(lay.shapes().size(), 1000u);
  EXPECT_TRUE(agree(scan_exposure(lay, targets), voxel_oracle(lay, targets, 10), 10));
  const auto guarded = plan_guards(lay, scan_exposure(lay, targets), {GuardArchitecture::PartiallyConnected});
  EXPECT_TRUE(agree(scan_exposure(guarded.layout, targets), voxel_oracle(guarded.layout, targets, 10), 10));
}

TEST(Exposure, AddingShapesNeverOpensFaces) {
  auto rules = bundled_tech();
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    RandomLayoutOptions o;
    o.nets = 25;
    o.extent = 5000;
    auto lay = random_layout(rules, seed, o);
    const auto targets = all_nets(lay);
    const auto before = scan_exposure(lay, targets);
    lay.nets()["extra"];
    const int layer = 1 + static_cast<int>(rng() % 4);
    const Nm y = rules->layer(layer).mmp * static_cast<Nm>(1 + rng() % 30);
    const Nm x0 = 10 * static_cast<Nm>(rng() % 300);
    lay.add_segment(WireSegment{"extra", layer, {x0, y}, {x0 + 1500, y}, rules->layer(layer).default_width});
    const auto after = scan_exposure(lay, targets);
    for (const auto& [n, ne] : before.nets)
      for (std::size_t k = 0; k < ne.segments.size(); ++k)
        for (Face f : kAllFaces)
          EXPECT_TRUE(contained(after.nets.at(n).segments[k].open(f), ne.segments[k].open(f))) << n;
    EXPECT_LE(after.open_weight, before.open_weight);
  }
}

TEST(Exposure, BlockedFractionTranslationInvariant) {
  auto rules = bundled_tech();
  const Nm step = 2660;  // common multiple of the layer 1-4 pitches
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomLayoutOptions o;
    o.nets = 30;
    o.extent = 5000;
    const auto lay = random_layout(rules, seed, o);
    Layout moved(rules);
    for (const auto& [n, net] : lay.nets()) {
      moved.nets()[n];
      for (auto s : net.segments) {
        s.a = {s.a.x + 2 * step, s.a.y + 3 * step};
        s.b = {s.b.x + 2 * step, s.b.y + 3 * step};
        moved.add_segment(s);
      }
      for (auto v : net.vias) {
        v.at = {v.at.x + 2 * step, v.at.y + 3 * step};
        moved.add_via(v);
      }
    }
    const auto targets = all_nets(lay);
    EXPECT_DOUBLE_EQ(scan_exposure(lay, targets).blocked_fraction(), scan_exposure(moved, targets).blocked_fraction());
  }
}

TEST(Exposure, FaceWeightsAreLengthAndUnitEnds) {
  const auto lay = single_target(10000);
  const auto rep = scan_exposure(lay, {"t"});
  EXPECT_EQ(rep.total_weight, 4 * 10000 + 2);
  EXPECT_EQ(rep.open_weight, rep.total_weight);
}

TEST(Exposure, JsonKeyedByNetSegmentFace) {
  const auto lay = single_target();
  const auto j = exposure_to_json(scan_exposure(lay, {"t"}));
  EXPECT_NE(j.find("\"t\""), std::string::npos);
  EXPECT_NE(j.find("lateral_low"), std::string::npos);
  EXPECT_NE(j.find("15.0"), std::string::npos);
}
