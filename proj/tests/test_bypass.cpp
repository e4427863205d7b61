#include <gtest/gtest.h>

#include "shieldroute/bypass.hpp"
#include "shieldroute/error.hpp"
#include "shieldroute/netlist.hpp"
#include "shieldroute/tamper.hpp"
#include "test_support.hpp"

using namespace shieldroute;
using namespace testsupport;

namespace {

PlannedLayout guarded(int layer, bool horizontal, GuardArchitecture arch) {
  auto rules = bundled_tech();
  Layout l(rules);
  const Nm track = track_position(*rules, layer, 30000 / rules->layer(layer).mmp);
  const Point a = horizontal ? Point{20160, track} : Point{track, 20160};
  const Point b = horizontal ? Point{30240, track} : Point{track, 30240};
  l.add_segment(wire(*rules, "secure_x", layer, a, b));
  return plan_guards(l, scan_exposure(l, {"secure_x"}), {arch});
}

JogSite site_on(const std::vector<JogSite>& sites, int guard_layer) {
  for (const auto& s : sites)
    if (s.guard_layer == guard_layer) return s;
  throw std::runtime_error("no jog site on layer " + std::to_string(guard_layer));
}

// Everything except guards and the named targets.
void expect_bystanders_untouched(const Layout& before, const Layout& after, const std::set<std::string>& targets) {
  for (const auto& [name, net] : before.nets()) {
    if (before.guard_nets().count(name) || targets.count(name)) continue;
    ASSERT_TRUE(after.nets().count(name)) << name;
    EXPECT_EQ(after.nets().at(name), net) << name;
  }
  EXPECT_EQ(after.placements(), before.placements());
}

}  // namespace

TEST(Delete, OpensTheTarget) {
  const auto p = guarded(3, true, GuardArchitecture::FullyDisjoint);
  for (const auto& g : p.plan.guards) {
    const auto res = delete_attack(p.layout, g.name);
    EXPECT_FALSE(res.layout.nets().count(g.name) && !res.layout.nets().at(g.name).segments.empty());
    EXPECT_LT(scan_exposure(res.layout, {"secure_x"}).blocked_fraction(), 1.0) << g.name;
    EXPECT_EQ(res.record.kind, AttackKind::Delete);
    EXPECT_EQ(res.record.guards, std::vector<std::string>{g.name});
    EXPECT_EQ(res.record.delta_length, -g.golden.length);
    expect_bystanders_untouched(p.layout, res.layout, {"secure_x"});
    EXPECT_EQ(res.layout.nets().at("secure_x"), p.layout.nets().at("secure_x"));
  }
}

TEST(Delete, ContinuityCatchesFullyConnectedDelete) {
  const auto p = guarded(3, true, GuardArchitecture::FullyConnected);
  const auto res = delete_attack(p.layout, p.plan.guards[0].name);
  const auto rep = detect(p.plan, res.layout);
  EXPECT_EQ(rep.continuity.verdict, Verdict::Tampered);
  EXPECT_TRUE(rep.tampered());
}

TEST(Delete, UnknownOrNonGuardNetThrows) {
  const auto p = guarded(3, true, GuardArchitecture::FullyDisjoint);
  const Layout copy = p.layout;
  EXPECT_THROW(delete_attack(p.layout, "guard_9999"), LookupError);
  EXPECT_THROW(delete_attack(p.layout, "secure_x"), LookupError);
  EXPECT_EQ(p.layout, copy);
}

TEST(Move, StepIsCommonPitch) {
  const auto p = guarded(3, true, GuardArchitecture::FullyConnected);
  // Layers 2..4 are in use: pitches 140, 140 and 190.
  EXPECT_EQ(move_step(p.layout, {p.plan.guards[0].name}), 2660);
  const auto d = guarded(3, true, GuardArchitecture::FullyDisjoint);
  for (const auto& g : d.plan.guards) {
    const Nm s = move_step(d.layout, {g.name});
    for (const auto& seg : g.geometry.segments) EXPECT_EQ(s % d.layout.rules().layer(seg.layer).mmp, 0);
  }
}

TEST(Move, TenPitchesIntoEmptySpaceKillsCoupling) {
  const auto p = guarded(3, true, GuardArchitecture::FullyDisjoint);
  for (const auto& g : p.plan.guards) {
    ASSERT_FALSE(g.designed_coupling.empty());
    const Nm step = move_step(p.layout, {g.name});
    const Point t{0, 10 * step};
    const auto res = move_attack(p.layout, {g.name}, t);
    EXPECT_EQ(res.record.translation, t);
    EXPECT_EQ(res.record.delta_length, 0);
    EXPECT_EQ(res.record.delta_bends, 0);
    const auto& moved = res.layout.nets().at(g.name);
    EXPECT_EQ(coupling_length(res.layout.rules(), moved, res.layout.nets().at("secure_x")), 0) << g.name;
    // Rigid: every segment shifted by the same vector, length unchanged.
    ASSERT_EQ(moved.segments.size(), g.geometry.segments.size());
    for (std::size_t i = 0; i < moved.segments.size(); ++i) {
      EXPECT_EQ(moved.segments[i].a, (Point{g.geometry.segments[i].a.x + t.x, g.geometry.segments[i].a.y + t.y}));
      EXPECT_EQ(moved.segments[i].length(), g.geometry.segments[i].length());
    }
    const auto traced = trace_path(moved);
    ASSERT_TRUE(traced);
    EXPECT_EQ(traced->length, g.golden.length);
    EXPECT_TRUE(drc_check(res.layout).empty());
    expect_bystanders_untouched(p.layout, res.layout, {"secure_x"});
  }
}

TEST(Move, OccupiedDestinationIsInfeasible) {
  const auto p = guarded(3, true, GuardArchitecture::FullyDisjoint);
  // Lateral guard one step onto the target's track.
  std::string lateral;
  for (const auto& g : p.plan.guards)
    if (g.geometry.segments.size() == 1 && g.geometry.segments[0].layer == 3 &&
        g.geometry.segments[0].across() < p.layout.nets().at("secure_x").segments[0].across())
      lateral = g.name;
  ASSERT_FALSE(lateral.empty());
  const Layout copy = p.layout;
  const Nm step = move_step(p.layout, {lateral});
  EXPECT_EQ(step, 140);
  EXPECT_THROW(move_attack(p.layout, {lateral}, {0, step}), InfeasibleError);
  EXPECT_THROW(move_attack(p.layout, {lateral}, {0, 70}), Error);  // off the grid
  EXPECT_EQ(p.layout, copy);
}

TEST(Move, FindMoveReturnsNearestLegal) {
  const auto p = guarded(3, true, GuardArchitecture::FullyConnected);
  const std::string g = p.plan.guards[0].name;
  const auto t = find_move(p.layout, {g}, 10);
  ASSERT_TRUE(t);
  EXPECT_NE(*t, (Point{0, 0}));
  EXPECT_NO_THROW(move_attack(p.layout, {g}, *t));
  const Nm step = move_step(p.layout, {g});
  EXPECT_EQ(t->x % step, 0);
  EXPECT_EQ(t->y % step, 0);
}

TEST(Jog, LayerFourTopGuardAddsTwoPitches) {
  const auto p = guarded(3, true, GuardArchitecture::PartiallyConnected);
  const auto sites = jog_sites(p.layout, p.plan);
  const auto s = site_on(sites, 4);
  const auto res = jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::Lengthening);
  EXPECT_EQ(res.record.delta_length, 380);
  EXPECT_EQ(res.record.delta_bends, 4);
  EXPECT_EQ(res.record.stub_layer, 4);
  EXPECT_EQ(res.record.attach, s.attach);
  EXPECT_TRUE(drc_check(res.layout).empty());
  const auto* g = p.plan.find(s.guard);
  ASSERT_TRUE(g);
  const auto after = trace_path(res.layout.nets().at(s.guard), g->terminals[0]);
  ASSERT_TRUE(after);
  EXPECT_EQ(after->length - g->golden.length, 380);
  EXPECT_EQ(static_cast<int>(after->features.size()) - static_cast<int>(g->golden.features.size()), 4);
}

TEST(Jog, LayerOneBottomGuardAddsTwoPitches) {
  const auto p = guarded(2, false, GuardArchitecture::PartiallyConnected);
  const auto s = site_on(jog_sites(p.layout, p.plan), 1);
  const auto res = jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::Lengthening, 1);
  EXPECT_EQ(res.record.stub_layer, 1);
  EXPECT_EQ(res.record.guards, std::vector<std::string>{s.guard});
  EXPECT_EQ(res.record.delta_length, 280);
  EXPECT_TRUE(drc_check(res.layout).empty());
}

TEST(Jog, BendPreservingKeepsLengthOnLayerOne) {
  const auto p = guarded(2, false, GuardArchitecture::FullyConnected);
  const auto s = site_on(jog_sites(p.layout, p.plan), 1);
  const auto res = jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::BendPreserving, 1);
  EXPECT_EQ(res.record.stub_layer, 1);
  EXPECT_EQ(res.record.delta_length, 0);
  EXPECT_EQ(res.record.delta_bends, 4);
  EXPECT_TRUE(drc_check(res.layout).empty());
  const auto* g = p.plan.find(s.guard);
  const auto after = trace_path(res.layout.nets().at(s.guard), g->terminals[0]);
  ASSERT_TRUE(after);
  EXPECT_EQ(after->length, g->golden.length);
  // Runs that disappeared from the golden profile add up to at least the attack edit.
  std::multiset<Nm> before(g->golden.runs.begin(), g->golden.runs.end());
  for (Nm r : after->runs) {
    auto it = before.find(r);
    if (it != before.end()) before.erase(it);
  }
  Nm removed = 0;
  for (Nm r : before) removed += r;
  EXPECT_GE(removed, 280);
}

TEST(Jog, EveryLengtheningSiteAddsExactlyTwoPitches) {
  const auto p = guarded(3, true, GuardArchitecture::PartiallyConnected);
  std::size_t tried = 0;
  for (const auto& s : jog_sites(p.layout, p.plan)) {
    if (tried++ % 7) continue;
    const auto res = jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::Lengthening, s.guard_layer);
    EXPECT_EQ(res.record.stub_layer, s.guard_layer);
    EXPECT_EQ(res.record.delta_length, 2 * p.layout.rules().layer(s.guard_layer).mmp);
    EXPECT_TRUE(drc_check(res.layout).empty());
    expect_bystanders_untouched(p.layout, res.layout, {"secure_x"});
    // Target geometry keeps its original wire; only the stub is added.
    const auto& before = p.layout.nets().at("secure_x");
    const auto& after = res.layout.nets().at("secure_x");
    EXPECT_EQ(after.segments.front(), before.segments.front());
    EXPECT_EQ(after.vias.size(), before.vias.size() + 1);
  }
  EXPECT_GT(tried, 20u);
}

// Target at y=34300: the nearest L4 track is 90 nm off, so the top guard's
// width misses the target's but still forbids a via pad there.
TEST(Jog, OffCentreTopGuardStillYieldsSites) {
  auto rules = bundled_tech();
  Layout l(rules);
  const Nm track = track_position(*rules, 3, 245);
  ASSERT_EQ(track, 34300);
  l.add_segment(wire(*rules, "secure_x", 3, {22960, track}, {43120, track}));
  const auto p = plan_guards(l, scan_exposure(l, {"secure_x"}), {GuardArchitecture::FullyConnected});
  const auto s = site_on(jog_sites(p.layout, p.plan), 4);
  const auto res = jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::Lengthening, 4);
  EXPECT_EQ(res.record.delta_length, 2 * rules->layer(4).mmp);
  EXPECT_TRUE(drc_check(res.layout).empty());
}

TEST(Jog, UnguardedAttachPointThrows) {
  const auto p = guarded(3, true, GuardArchitecture::PartiallyConnected);
  const Layout copy = p.layout;
  EXPECT_THROW(jog_attack(p.layout, p.plan, "secure_x", {1000, 1000}, JogVariant::Lengthening), Error);
  EXPECT_THROW(jog_attack(p.layout, p.plan, "nope", {20300, 4200}, JogVariant::Lengthening), Error);
  EXPECT_EQ(p.layout, copy);
}

TEST(Jog, FixtureSitesStayDrcClean) {
  const auto nl = parse_netlist(slurp(data_path("tiny.net")), NetlistFormat::Native);
  const auto targets = expand_fanin(nl, find_roots(nl), 2).targets;
  const auto lay = read_layout(slurp(data_path("tiny.layout")), bundled_tech());
  const auto p = plan_guards(lay, scan_exposure(lay, targets), {GuardArchitecture::PartiallyConnected});
  const auto sites = jog_sites(p.layout, p.plan);
  ASSERT_FALSE(sites.empty());
  int ok = 0;
  for (std::size_t i = 0; i < sites.size(); i += std::max<std::size_t>(1, sites.size() / 15)) {
    try {
      const auto res = jog_attack(p.layout, p.plan, sites[i].target, sites[i].attach, JogVariant::Lengthening);
      EXPECT_TRUE(drc_check(res.layout).empty());
      std::set<std::string> keep = targets;
      expect_bystanders_untouched(p.layout, res.layout, keep);
      ++ok;
    } catch (const InfeasibleError&) {
    }
  }
  EXPECT_GT(ok, 0);
}

TEST(AttackRecord, JsonRoundTrip) {
  const auto p = guarded(3, true, GuardArchitecture::PartiallyConnected);
  const auto s = site_on(jog_sites(p.layout, p.plan), 4);
  std::vector<AttackRecord> recs{
      jog_attack(p.layout, p.plan, s.target, s.attach, JogVariant::BendPreserving).record,
      delete_attack(p.layout, p.plan.guards[0].name).record,
  };
  const auto t = find_move(p.layout, {p.plan.guards[0].name}, 10);
  ASSERT_TRUE(t);
  recs.push_back(move_attack(p.layout, {p.plan.guards[0].name}, *t).record);
  for (const auto& r : recs) EXPECT_EQ(attack_record_from_json(attack_record_to_json(r)), r);
  EXPECT_THROW(attack_record_from_json("{\"kind\": \"drill\"}"), Error);
  EXPECT_THROW(attack_record_from_json("not json"), Error);
}

TEST(AttackNames, ParseAndPrint) {
  for (auto k : {AttackKind::Delete, AttackKind::Move, AttackKind::Jog}) EXPECT_EQ(parse_attack_kind(to_string(k)), k);
  for (auto v : {JogVariant::Lengthening, JogVariant::BendPreserving}) EXPECT_EQ(parse_jog_variant(to_string(v)), v);
  EXPECT_THROW(parse_attack_kind("drill"), Error);
}
