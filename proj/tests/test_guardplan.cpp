#include <gtest/gtest.h>

#include "shieldroute/error.hpp"
#include "shieldroute/guardplan.hpp"
#include "test_support.hpp"

using namespace shieldroute;
using namespace testsupport;

namespace {

Layout single_target(int layer = 3) {
  auto rules = bundled_tech();
  Layout l(rules);
  // Horizontal layer-3 wire 10 um long on track y = 20 * 0.14 um.
  l.add_segment(wire(*rules, "secure_a", layer, {5000, 2800}, {15000, 2800}));
  return l;
}

}  // namespace

TEST(GuardPlan, IsolatedSegmentEachArchitecture) {
  for (auto arch : {GuardArchitecture::FullyDisjoint, GuardArchitecture::PartiallyConnected,
                    GuardArchitecture::FullyConnected}) {
    Layout l = single_target();
    auto ex = scan_exposure(l, {"secure_a"});
    EXPECT_EQ(ex.blocked_fraction(), 0.0);
    auto planned = plan_guards(l, ex, {arch});
    auto after = scan_exposure(planned.layout, {"secure_a"});
    EXPECT_TRUE(after.fully_blocked()) << to_string(arch);
    EXPECT_TRUE(drc_check(planned.layout).empty());
    if (arch == GuardArchitecture::FullyDisjoint) EXPECT_GE(planned.plan.guards.size(), 4u);
    if (arch == GuardArchitecture::FullyConnected) EXPECT_EQ(planned.plan.guards.size(), 1u);
    for (const auto& g : planned.plan.guards) {
      EXPECT_EQ(g.golden.length, net_length(g.geometry));
      EXPECT_EQ(g.golden.runs.size(), g.golden.features.size() + 1);
    }
  }
}

namespace {

std::vector<WireSegment> guard_segments(const Layout& lay) {
  std::vector<WireSegment> out;
  for (const auto& g : lay.guard_nets())
    for (const auto& s : lay.nets().at(g).segments) out.push_back(s);
  return out;
}

bool covers(const std::vector<WireSegment>& segs, int layer, Nm y, Nm xlo, Nm xhi) {
  for (const auto& s : segs)
    if (s.layer == layer && s.axis() == Axis::X && s.across() == y && s.lo() <= xlo && s.hi() >= xhi) return true;
  return false;
}

// Shapes of one net joined when they touch on a layer; via pads join their two layers.
std::size_t components(const Layout& lay, const std::string& net, std::vector<std::size_t>* comp_of = nullptr) {
  const auto shapes = lay.net_shapes(net);
  std::vector<std::size_t> parent(shapes.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < shapes.size(); ++i)
    for (std::size_t j = i + 1; j < shapes.size(); ++j) {
      const bool same_via = shapes[i].kind == ShapeKind::ViaPad && shapes[j].kind == ShapeKind::ViaPad &&
                            shapes[i].index == shapes[j].index;
      if (same_via || (shapes[i].layer == shapes[j].layer && touches(shapes[i].rect, shapes[j].rect)))
        parent[find(i)] = find(j);
    }
  std::set<std::size_t> roots;
  for (std::size_t i = 0; i < shapes.size(); ++i) roots.insert(find(i));
  if (comp_of) {
    comp_of->clear();
    for (std::size_t i = 0; i < shapes.size(); ++i) comp_of->push_back(find(i));
  }
  return roots.size();
}

struct Fixture {
  Layout layout;
  std::set<std::string> targets;
};

Fixture load_fixture(const std::string& name) {
  const auto nl = parse_netlist(slurp(data_path(name + ".net")), NetlistFormat::Native);
  return {read_layout(slurp(data_path(name + ".layout")), bundled_tech()), expand_fanin(nl, find_roots(nl), 2).targets};
}

const GuardArchitecture kArchs[] = {GuardArchitecture::FullyDisjoint, GuardArchitecture::PartiallyConnected,
                                    GuardArchitecture::FullyConnected};

}  // namespace

TEST(GuardPlan, GuardTracksAroundIsolatedSegment) {
  Layout l = single_target();
  const auto planned = plan_guards(l, scan_exposure(l, {"secure_a"}), {GuardArchitecture::FullyDisjoint});
  const auto segs = guard_segments(planned.layout);
  // Lateral guards one pitch away on layer 3.
  EXPECT_TRUE(covers(segs, 3, 2800 - 140, 5000, 15000));
  EXPECT_TRUE(covers(segs, 3, 2800 + 140, 5000, 15000));
  // Top on the nearest layer-4 track, bottom on layer 2, both running past the ends by spacing + width.
  EXPECT_TRUE(covers(segs, 4, 2850, 5000 - 190, 15000 + 190));
  EXPECT_TRUE(covers(segs, 2, 2800, 5000 - 140, 15000 + 140));
  for (const auto& s : segs) EXPECT_FALSE(is_off_track(planned.layout.rules(), s));
}

TEST(GuardPlan, FullyConnectedIsOneNetWithTwoTerminals) {
  Layout l = single_target();
  const auto planned = plan_guards(l, scan_exposure(l, {"secure_a"}), {GuardArchitecture::FullyConnected});
  ASSERT_EQ(planned.plan.guards.size(), 1u);
  const auto& g = planned.plan.guards[0];
  std::vector<std::size_t> comp;
  EXPECT_EQ(components(planned.layout, g.name, &comp), 1u);
  EXPECT_NE(g.terminals[0], g.terminals[1]);
  const auto traced = trace_path(planned.layout.nets().at(g.name), g.terminals[0]);
  ASSERT_TRUE(traced);
  EXPECT_EQ(traced->start, g.terminals[0]);
  EXPECT_EQ(traced->end, g.terminals[1]);
}

TEST(GuardPlan, ParallelTargetsShareTheMiddleGuard) {
  auto rules = bundled_tech();
  Layout one(rules), two(rules);
  one.add_segment(wire(*rules, "t0", 3, {5000, 2800}, {15000, 2800}));
  two = one;
  // One free track between the two targets.
  two.add_segment(wire(*rules, "t1", 3, {5000, 3080}, {15000, 3080}));
  for (auto arch : kArchs) {
    const auto p1 = plan_guards(one, scan_exposure(one, {"t0"}), {arch});
    const auto p2 = plan_guards(two, scan_exposure(two, {"t0", "t1"}), {arch});
    EXPECT_TRUE(scan_exposure(p2.layout, {"t0", "t1"}).fully_blocked());
    std::size_t n1 = 0, n2 = 0;
    for (const auto& s : guard_segments(p1.layout)) n1 += s.axis() == Axis::X && s.layer == 3;
    for (const auto& s : guard_segments(p2.layout)) n2 += s.axis() == Axis::X && s.layer == 3;
    EXPECT_LT(n2, 2 * n1) << to_string(arch);
    EXPECT_TRUE(covers(guard_segments(p2.layout), 3, 2940, 5000, 15000));
    EXPECT_LT(guard_segments(p2.layout).size(), 2 * guard_segments(p1.layout).size()) << to_string(arch);
  }
}

TEST(GuardPlan, FixtureInvariants) {
  for (const char* name : {"tiny", "small", "medium", "keys"}) {
    const auto fx = load_fixture(name);
    const auto before = scan_exposure(fx.layout, fx.targets);
    for (auto arch : kArchs) {
      const auto planned = plan_guards(fx.layout, before, {arch});
      const auto& lay = planned.layout;
      EXPECT_TRUE(scan_exposure(lay, fx.targets).fully_blocked()) << name << ' ' << to_string(arch);
      EXPECT_TRUE(drc_check(lay).empty()) << name << ' ' << to_string(arch);
      // Everything that existed before is untouched.
      for (const auto& [n, net] : fx.layout.nets()) EXPECT_EQ(lay.nets().at(n), net) << n;
      EXPECT_EQ(lay.placements(), fx.layout.placements());
      for (const auto& g : planned.plan.guards) {
        EXPECT_TRUE(lay.guard_nets().count(g.name));
        EXPECT_TRUE(lay.nets().at(g.name).locked);
        EXPECT_EQ(lay.nets().at(g.name), g.geometry);
        EXPECT_EQ(components(lay, g.name), 1u) << g.name;
        const auto traced = trace_path(g.geometry, g.terminals[0]);
        ASSERT_TRUE(traced) << g.name;
        EXPECT_EQ(*traced, g.golden);
        for (const auto& s : g.geometry.segments) EXPECT_FALSE(is_off_track(lay.rules(), s));
      }
      if (arch == GuardArchitecture::FullyConnected) EXPECT_EQ(planned.plan.guards.size(), 1u);
      EXPECT_EQ(read_guard_plan(write_guard_plan(planned.plan)), planned.plan);
    }
  }
}

TEST(GuardPlan, DeterministicOutput) {
  const auto fx = load_fixture("small");
  const auto ex = scan_exposure(fx.layout, fx.targets);
  const auto a = plan_guards(fx.layout, ex, {GuardArchitecture::FullyConnected});
  const auto b = plan_guards(fx.layout, ex, {GuardArchitecture::FullyConnected});
  EXPECT_EQ(write_layout(a.layout), write_layout(b.layout));
  EXPECT_EQ(write_guard_plan(a.plan), write_guard_plan(b.plan));
}

TEST(GuardPlan, UncoverableIntervalIsInfeasible) {
  auto rules = bundled_tech();
  Layout l = single_target();
  // Foreign locked wire sits on the lateral guard track's neighbour: too close for a guard, too far to block.
  auto& f = l.nets()["foreign"];
  f.locked = true;
  l.add_segment(WireSegment{"foreign", 3, {5000, 2800 + 260}, {15000, 2800 + 260}, 70});
  const auto ex = scan_exposure(l, {"secure_a"});
  ASSERT_FALSE(ex.nets.at("secure_a").segments[0].open(Face::LateralHigh).empty());
  EXPECT_THROW(plan_guards(l, ex, {GuardArchitecture::FullyDisjoint}), InfeasibleError);
}

TEST(GuardPlan, PlanTextRejectsTamperedGolden) {
  Layout l = single_target();
  const auto planned = plan_guards(l, scan_exposure(l, {"secure_a"}), {GuardArchitecture::FullyConnected});
  std::string text = write_guard_plan(planned.plan);
  const auto pos = text.find("golden ");
  ASSERT_NE(pos, std::string::npos);
  const auto eol = text.find('\n', pos);
  text.replace(pos, eol - pos, "golden " + planned.plan.guards[0].name + " 1.000 0");
  EXPECT_THROW(read_guard_plan(text), ParseError);
}

TEST(Candidates, NoAdjacentNetsGivesBaseline) {
  Layout l = single_target();
  l.add_segment(wire(l.rules(), "far", 3, {30000, 30000}, {40000, 30000}));
  const auto nl = parse_netlist("input a\ncell g BUF A=a : Y=secure_a\ncell h BUF A=a : Y=far\n", NetlistFormat::Native);
  const auto rep = select_existing_candidates(nl, l, {"secure_a"});
  EXPECT_TRUE(rep.ranked.empty());
  EXPECT_DOUBLE_EQ(rep.achievable_blockage, rep.baseline_blockage);
}

TEST(Candidates, OneParallelNetFallsShortOfFullBlockage) {
  Layout l = single_target();
  l.add_segment(wire(l.rules(), "nbr", 3, {4000, 2940}, {16000, 2940}));
  const auto nl = parse_netlist("input a\ncell g BUF A=a : Y=secure_a\ncell h BUF A=a : Y=nbr\n", NetlistFormat::Native);
  const Layout copy = l;
  const auto rep = select_existing_candidates(nl, l, {"secure_a"});
  ASSERT_EQ(rep.ranked.size(), 1u);
  EXPECT_EQ(rep.ranked[0].net, "nbr");
  EXPECT_GT(rep.achievable_blockage, rep.baseline_blockage);
  EXPECT_LT(rep.achievable_blockage, 1.0);
  EXPECT_EQ(l, copy);
}

TEST(Candidates, MatchExhaustiveFilter) {
  auto check = [](const Netlist& nl, const Layout& lay, const std::set<std::string>& targets,
                  const CandidateConstraints& c) {
    auto restricted = [&](const std::set<std::string>& keep) {
      Layout out(lay.rules_ptr());
      out.placements() = lay.placements();
      for (const auto& k : keep) out.nets()[k] = lay.nets().at(k);
      return out;
    };
    const auto base = scan_exposure(restricted(targets), targets);
    std::set<std::string> expect;
    for (const auto& [n, net] : lay.nets()) {
      if (targets.count(n) || lay.guard_nets().count(n) || net.segments.empty()) continue;
      bool layers_ok = true;
      for (const auto& s : net.segments) layers_ok = layers_ok && (c.layers.empty() || c.layers.count(s.layer));
      if (!layers_ok || net_length(net) < c.min_length) continue;
      if (c.require_timing_critical) {
        const auto id = nl.find_net(n);
        if (!id || !nl.net(*id).timing_critical) continue;
      }
      auto keep = targets;
      keep.insert(n);
      const auto with = scan_exposure(restricted(keep), targets);
      if (with.open_weight < base.open_weight) expect.insert(n);
    }
    std::set<std::string> got;
    for (const auto& cand : select_existing_candidates(nl, lay, targets, c).ranked) got.insert(cand.net);
    return got == expect;
  };
  {
    const auto nl = parse_netlist(slurp(data_path("tiny.net")), NetlistFormat::Native);
    const auto fx = load_fixture("tiny");
    EXPECT_TRUE(check(nl, fx.layout, fx.targets, {}));
    const auto rep = select_existing_candidates(nl, fx.layout, fx.targets);
    EXPECT_LE(rep.achievable_blockage, 1.0);
  }
  // Random wiring where neighbours are common; the netlist only supplies flags.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomLayoutOptions o;
    o.nets = 30;
    o.extent = 5000;
    const auto lay = random_layout(bundled_tech(), 500 + seed, o);
    std::string text = "input a\n";
    for (const auto& [n, net] : lay.nets()) text += "cell c_" + n + " BUF A=a : Y=" + n + "\n";
    for (const auto& [n, net] : lay.nets())
      if (n.back() % 2) text += "net " + n + " timing_critical\n";
    const auto nl = parse_netlist(text, NetlistFormat::Native);
    const std::set<std::string> targets{"n0", "n5", "n10"};
    EXPECT_TRUE(check(nl, lay, targets, {})) << seed;
    EXPECT_TRUE(check(nl, lay, targets, {{2, 3}, 500, false})) << seed;
    EXPECT_TRUE(check(nl, lay, targets, {{}, 0, true})) << seed;
  }
}

TEST(GuardPlan, EveryLayerAndOrientation) {
  auto rules = bundled_tech();
  // Layer 1 is left out: its bottom face looks at the device layer.
  for (int layer = 2; layer < rules->layer_count(); ++layer) {
    const Nm p = rules->layer(layer).mmp;
    for (bool horizontal : {true, false}) {
      Layout l(rules);
      const Nm track = track_position(*rules, layer, 30000 / p);
      const Point a = horizontal ? Point{20000, track} : Point{track, 20000};
      const Point b = horizontal ? Point{40000, track} : Point{track, 40000};
      l.add_segment(wire(*rules, "secure_x", layer, a, b));
      for (auto arch : kArchs) {
        const auto planned = plan_guards(l, scan_exposure(l, {"secure_x"}), {arch});
        EXPECT_TRUE(scan_exposure(planned.layout, {"secure_x"}).fully_blocked())
            << "L" << layer << (horizontal ? " h " : " v ") << to_string(arch);
        EXPECT_TRUE(drc_check(planned.layout).empty());
      }
    }
  }
}

TEST(GuardPlan, TwoLayerTargetWithVia) {
  auto rules = bundled_tech();
  Layout l(rules);
  l.add_segment(wire(*rules, "secure_x", 3, {10080, 14000}, {19950, 14000}));
  l.add_segment(wire(*rules, "secure_x", 4, {19950, 14000}, {19950, 24130}));
  l.add_via({"secure_x", 3, {19950, 14000}});
  // The inner corner walls in more guard ends than one open path can have, so a single
  // connected guard is allowed to come back infeasible.
  EXPECT_THROW(plan_guards(l, scan_exposure(l, {"secure_x"}), {GuardArchitecture::FullyConnected}),
               InfeasibleError);
  for (auto arch : {GuardArchitecture::FullyDisjoint, GuardArchitecture::PartiallyConnected}) {
    const auto planned = plan_guards(l, scan_exposure(l, {"secure_x"}), {arch});
    EXPECT_TRUE(scan_exposure(planned.layout, {"secure_x"}).fully_blocked()) << to_string(arch);
    EXPECT_TRUE(drc_check(planned.layout).empty());
  }
}
