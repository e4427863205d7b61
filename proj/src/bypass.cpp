#include "shieldroute/bypass.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "json.hpp"
#include "shieldroute/error.hpp"

namespace shieldroute {

std::string to_string(AttackKind k) {
  switch (k) {
    case AttackKind::Delete: return "delete";
    case AttackKind::Move: return "move";
    case AttackKind::Jog: return "jog";
  }
  return "?";
}

std::string to_string(JogVariant v) { return v == JogVariant::Lengthening ? "lengthening" : "bend_preserving"; }

AttackKind parse_attack_kind(std::string_view s) {
  if (s == "delete") return AttackKind::Delete;
  if (s == "move") return AttackKind::Move;
  if (s == "jog") return AttackKind::Jog;
  throw Error("unknown attack kind '" + std::string(s) + "' (delete, move, jog)");
}

JogVariant parse_jog_variant(std::string_view s) {
  if (s == "lengthening") return JogVariant::Lengthening;
  if (s == "bend_preserving") return JogVariant::BendPreserving;
  throw Error("unknown jog variant '" + std::string(s) + "' (lengthening, bend_preserving)");
}

namespace {

struct LayerRect {
  int layer;
  Rect rect;
};

std::vector<LayerRect> net_rects(const TechRules& rules, const RoutedNet& n) {
  std::vector<LayerRect> out;
  for (const auto& s : n.segments) out.push_back({s.layer, s.rect()});
  for (const auto& v : n.vias)
    for (int l : {v.lower_layer, v.lower_layer + 1}) out.push_back({l, via_pad(rules, v, l)});
  return out;
}

ShapeIndex index_without(const Layout& layout, const std::set<std::string>& skip) {
  ShapeIndex idx(layout.rules());
  for (auto& s : layout.shapes())
    if (!skip.count(s.net)) idx.insert(std::move(s));
  return idx;
}

bool clear(const TechRules& rules, const ShapeIndex& idx, int layer, const Rect& r) {
  const Nm s = rules.layer(layer).min_spacing;
  for (auto id : idx.query(layer, r.expanded(s)))
    if (distance_sq(idx.shape(id).rect, r) < s * s) return false;
  return true;
}

bool shares_endpoint(const WireSegment& a, const WireSegment& b) {
  return a.a == b.a || a.a == b.b || a.b == b.a || a.b == b.b;
}

// Wires the edit added or changed must keep min spacing from the rest of the
// net on their layer unless they meet at an endpoint.
bool self_clear(const TechRules& rules, const RoutedNet& n, const RoutedNet& before) {
  // Trimmed remains of an original wire keep the clearances that wire had.
  auto changed = [&](const WireSegment& s) {
    for (const auto& o : before.segments)
      if (o.layer == s.layer && o.axis() == s.axis() && o.across() == s.across() && o.lo() <= s.lo() &&
          s.hi() <= o.hi())
        return false;
    return true;
  };
  for (std::size_t i = 0; i < n.segments.size(); ++i) {
    for (std::size_t j = i + 1; j < n.segments.size(); ++j) {
      const auto& a = n.segments[i];
      const auto& b = n.segments[j];
      if (a.layer != b.layer || shares_endpoint(a, b)) continue;
      if (!changed(a) && !changed(b)) continue;
      const Nm s = rules.layer(a.layer).min_spacing;
      if (distance_sq(a.rect(), b.rect()) < s * s) return false;
    }
  }
  return true;
}

Nm sign(Nm v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Guard wire running over or under the target at `t` along it, close enough
// across to forbid a via pad on the target's centerline.
bool guards_face_at(const TechRules& rules, const WireSegment& gs, const WireSegment& ts, Nm t) {
  const Axis ax = ts.axis();
  if (gs.axis() != ax || t < gs.lo() || t > gs.hi()) return false;
  const auto& l = rules.layer(gs.layer);
  const Rect g = gs.rect();
  const Nm pad_lo = ts.across() - l.default_width / 2, pad_hi = pad_lo + l.default_width;
  return std::max(g.lo(other(ax)), pad_lo) - std::min(g.hi(other(ax)), pad_hi) < l.min_spacing;
}

// Working copy of a guard with tombstones so indices stay stable.
class UTurnPuller {
 public:
  UTurnPuller(const TechRules& rules, const ShapeIndex& others, RoutedNet& net, std::vector<char> frozen)
      : rules_(rules), others_(others), n_(net), frozen_(std::move(frozen)), dead_(net.segments.size(), 0) {}

  /// Shifts U-turn bases inward by a total of `need`; false if room runs out.
  bool pull(Nm need) {
    for (std::size_t b = 0; b < n_.segments.size() && need > 0; ++b) {
      if (dead_[b] || frozen_[b]) continue;
      const Nm d = try_base(b, need);
      need -= d;
    }
    compact();
    return need == 0;
  }

 private:
  struct Corner {
    Point at;
    std::vector<std::size_t> chain;
    std::optional<std::size_t> via;
    Nm capacity = 0;
    Nm side = 0;
  };

  std::vector<std::size_t> segs_at(int layer, Point p, std::optional<std::size_t> skip) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_.segments.size(); ++i) {
      if (dead_[i] || (skip && *skip == i)) continue;
      const auto& s = n_.segments[i];
      if (s.layer == layer && (s.a == p || s.b == p)) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> vias_at(Point p) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_.vias.size(); ++i)
      if (n_.vias[i].at == p) out.push_back(i);
    return out;
  }

  std::optional<Corner> corner(std::size_t b, Point e) const {
    const auto& base = n_.segments[b];
    Corner c;
    c.at = e;
    const auto same = segs_at(base.layer, e, b);
    const auto vs = vias_at(e);
    std::size_t first = 0;
    int arm_layer = base.layer;
    if (same.size() == 1 && vs.empty()) {
      first = same[0];
    } else if (same.empty() && vs.size() == 1) {
      const auto& v = n_.vias[vs[0]];
      if (v.lower_layer == base.layer) arm_layer = base.layer + 1;
      else if (v.lower_layer + 1 == base.layer) arm_layer = v.lower_layer;
      else return std::nullopt;
      const auto o = segs_at(arm_layer, e, std::nullopt);
      if (o.size() != 1) return std::nullopt;
      first = o[0];
      c.via = vs[0];
    } else {
      return std::nullopt;
    }
    const Axis arm_axis = other(base.axis());
    if (n_.segments[first].axis() != arm_axis) return std::nullopt;

    std::size_t cur = first;
    Point near = e;
    while (true) {
      if (frozen_[cur]) return std::nullopt;
      const auto& s = n_.segments[cur];
      c.chain.push_back(cur);
      c.capacity += s.length();
      const Point far = s.a == near ? s.b : s.a;
      const auto next = segs_at(arm_layer, far, cur);
      if (next.size() != 1 || !vias_at(far).empty()) break;
      const auto& ns = n_.segments[next[0]];
      if (ns.axis() != arm_axis || ns.across() != s.across()) break;
      near = far;
      cur = next[0];
    }
    const auto& f = n_.segments[first];
    const Point far0 = f.a == e ? f.b : f.a;
    c.side = sign(coord(far0, arm_axis) - coord(e, arm_axis));
    return c;
  }

  Nm try_base(std::size_t b, Nm need) {
    const auto base = n_.segments[b];
    const auto cp = corner(b, base.a);
    const auto cq = corner(b, base.b);
    if (!cp || !cq || cp->side == 0 || cp->side != cq->side) return 0;
    const Axis arm_axis = other(base.axis());
    const Nm dmax = std::min({need, cp->capacity - 1, cq->capacity - 1});
    auto shifted = [&](Point p, Nm d) {
      Point q = p;
      (arm_axis == Axis::X ? q.x : q.y) += cp->side * d;
      return q;
    };
    for (Nm d = dmax; d >= 1; --d) {
      WireSegment moved = base;
      moved.a = shifted(base.a, d);
      moved.b = shifted(base.b, d);
      if (!clear(rules_, others_, moved.layer, moved.rect())) continue;
      bool ok = true;
      for (const auto* c : {&*cp, &*cq}) {
        if (!c->via) continue;
        Via v = n_.vias[*c->via];
        v.at = shifted(v.at, d);
        for (int l : {v.lower_layer, v.lower_layer + 1})
          if (!clear(rules_, others_, l, via_pad(rules_, v, l))) ok = false;
      }
      if (!ok) continue;
      n_.segments[b] = moved;
      for (const auto* c : {&*cp, &*cq}) {
        const Point to = shifted(c->at, d);
        if (c->via) n_.vias[*c->via].at = to;
        Nm rem = d;
        for (std::size_t idx : c->chain) {
          auto& s = n_.segments[idx];
          if (rem >= s.length()) {
            rem -= s.length();
            dead_[idx] = 1;
            continue;
          }
          const Nm da = std::abs(coord(s.a, arm_axis) - coord(c->at, arm_axis));
          const Nm db = std::abs(coord(s.b, arm_axis) - coord(c->at, arm_axis));
          (da < db ? s.a : s.b) = to;
          break;
        }
      }
      return d;
    }
    return 0;
  }

  void compact() {
    std::vector<WireSegment> keep;
    for (std::size_t i = 0; i < n_.segments.size(); ++i)
      if (!dead_[i]) keep.push_back(n_.segments[i]);
    n_.segments = std::move(keep);
  }

  const TechRules& rules_;
  const ShapeIndex& others_;
  RoutedNet& n_;
  std::vector<char> frozen_;
  std::vector<char> dead_;
};

void set_deltas(AttackRecord& rec, const std::optional<TracedPath>& before, const std::optional<TracedPath>& after) {
  const Nm lb = before ? before->length : 0;
  const Nm la = after ? after->length : 0;
  const int bb = before ? static_cast<int>(before->features.size()) : 0;
  const int ba = after ? static_cast<int>(after->features.size()) : 0;
  rec.delta_length += la - lb;
  rec.delta_bends += ba - bb;
}

const RoutedNet& guard_net(const Layout& layout, const std::string& name) {
  const RoutedNet* n = layout.find_net(name);
  if (!n || !layout.guard_nets().count(name)) throw LookupError("no guard net named '" + name + "'");
  return *n;
}

}  // namespace

AttackResult delete_attack(const Layout& layout, const std::string& guard) {
  const RoutedNet& n = guard_net(layout, guard);
  AttackResult res{layout, {}};
  res.record.kind = AttackKind::Delete;
  res.record.guards = {guard};
  set_deltas(res.record, trace_path(n), std::nullopt);
  res.layout.nets().erase(guard);
  res.layout.guard_nets().erase(guard);
  return res;
}

Nm move_step(const Layout& layout, const std::vector<std::string>& guards) {
  const auto& rules = layout.rules();
  Nm step = 1;
  for (const auto& g : guards) {
    const RoutedNet& n = guard_net(layout, g);
    for (const auto& s : n.segments) step = std::lcm(step, rules.layer(s.layer).mmp);
    for (const auto& v : n.vias) {
      step = std::lcm(step, rules.layer(v.lower_layer).mmp);
      step = std::lcm(step, rules.layer(v.lower_layer + 1).mmp);
    }
  }
  return step;
}

namespace {

bool move_is_clear(const Layout& layout, const std::vector<std::string>& guards, const ShapeIndex& others, Point t) {
  const auto& rules = layout.rules();
  const Rect die = rules.die_rect();
  const bool bounded = rules.device_rows > 0 && rules.device_cols > 0;
  for (const auto& g : guards) {
    for (const auto& lr : net_rects(rules, *layout.find_net(g))) {
      const Rect r = lr.rect.translated(t.x, t.y);
      if (bounded && (r.xlo < die.xlo || r.ylo < die.ylo || r.xhi > die.xhi || r.yhi > die.yhi)) return false;
      if (!clear(rules, others, lr.layer, r)) return false;
    }
  }
  return true;
}

}  // namespace

AttackResult move_attack(const Layout& layout, const std::vector<std::string>& guards, Point translation) {
  if (guards.empty()) throw Error("move attack needs at least one guard net");
  const Nm step = move_step(layout, guards);
  if (translation == Point{0, 0} || translation.x % step != 0 || translation.y % step != 0)
    throw Error("move translation must be a nonzero multiple of " + format_um(step) + " um on both axes");
  const std::set<std::string> moved(guards.begin(), guards.end());
  const ShapeIndex others = index_without(layout, moved);
  if (!move_is_clear(layout, guards, others, translation))
    throw InfeasibleError("move destination is occupied or leaves the die");

  AttackResult res{layout, {}};
  res.record.kind = AttackKind::Move;
  res.record.guards = guards;
  res.record.translation = translation;
  for (const auto& g : guards) {
    RoutedNet& n = res.layout.nets().at(g);
    const auto before = trace_path(n);
    for (auto& s : n.segments) {
      s.a = {s.a.x + translation.x, s.a.y + translation.y};
      s.b = {s.b.x + translation.x, s.b.y + translation.y};
    }
    for (auto& v : n.vias) v.at = {v.at.x + translation.x, v.at.y + translation.y};
    set_deltas(res.record, before, trace_path(n));
  }
  return res;
}

std::optional<Point> find_move(const Layout& layout, const std::vector<std::string>& guards, int radius_steps) {
  if (guards.empty()) throw Error("move attack needs at least one guard net");
  const Nm step = move_step(layout, guards);
  const std::set<std::string> moved(guards.begin(), guards.end());
  const ShapeIndex others = index_without(layout, moved);
  for (int r = 1; r <= radius_steps; ++r) {
    for (int i = -r; i <= r; ++i) {
      const int rest = r - std::abs(i);
      for (int j : {-rest, rest}) {
        const Point t{i * step, j * step};
        if (move_is_clear(layout, guards, others, t)) return t;
        if (rest == 0) break;
      }
    }
  }
  return std::nullopt;
}

namespace {

struct JogTry {
  std::string guard;
  std::size_t segment;
  int layer;
};

AttackResult try_jog(const Layout& layout, const std::string& target, std::size_t tseg, Point attach,
                     const JogTry& jt, JogVariant variant) {
  const auto& rules = layout.rules();
  const WireSegment ts = layout.find_net(target)->segments[tseg];
  const RoutedNet& before = *layout.find_net(jt.guard);
  const WireSegment gs = before.segments[jt.segment];
  const Axis ax = ts.axis();
  const Nm t = coord(attach, ax), c = ts.across();
  const Nm p = rules.layer(jt.layer).mmp, w = rules.layer(jt.layer).default_width;
  const Nm t1 = t - p, t2 = t + p;
  if (!(gs.lo() < t1 && t2 < gs.hi())) throw InfeasibleError("guard segment is too short around the attach point");

  const Nm cg = gs.across();
  std::vector<Nm> dirs;
  if (cg > c) dirs = {1};
  else if (cg < c) dirs = {-1};
  else dirs = {1, -1};

  const auto traced_before = trace_path(before);
  if (!traced_before) throw InfeasibleError("guard '" + jt.guard + "' is not a simple path");
  const std::set<std::string> skip{jt.guard};
  const ShapeIndex others = index_without(layout, skip);

  std::string why = "no free adjacent track for the jog";
  for (Nm dir : dirs) {
    const Nm c2 = cg + dir * p;
    RoutedNet g = before;
    const Point lo_end = make_point(ax, gs.lo(), cg), hi_end = make_point(ax, gs.hi(), cg);
    const Point p1 = make_point(ax, t1, cg), p2 = make_point(ax, t1, c2), p3 = make_point(ax, t2, c2),
                p4 = make_point(ax, t2, cg);
    const std::vector<WireSegment> pieces{{jt.guard, jt.layer, lo_end, p1, gs.width},
                                          {jt.guard, jt.layer, p1, p2, w},
                                          {jt.guard, jt.layer, p2, p3, gs.width},
                                          {jt.guard, jt.layer, p3, p4, w},
                                          {jt.guard, jt.layer, p4, hi_end, gs.width}};
    g.segments.erase(g.segments.begin() + static_cast<std::ptrdiff_t>(jt.segment));
    g.segments.insert(g.segments.begin() + static_cast<std::ptrdiff_t>(jt.segment), pieces.begin(), pieces.end());
    bool ok = true;
    for (std::size_t k = 1; k <= 3; ++k)
      if (!clear(rules, others, jt.layer, pieces[k].rect())) ok = false;
    if (!ok) continue;
    if (!self_clear(rules, g, before) || !trace_path(g)) {
      why = "jog collides with the guard itself";
      continue;
    }

    if (variant == JogVariant::BendPreserving) {
      std::vector<char> frozen(g.segments.size(), 0);
      for (std::size_t k = 1; k <= 3; ++k) frozen[jt.segment + k] = 1;
      UTurnPuller puller(rules, others, g, frozen);
      if (!puller.pull(p)) {
        why = "no U-turn room to keep the guard length";
        continue;
      }
      if (!self_clear(rules, g, before) || !trace_path(g)) {
        why = "length compensation collides with the guard itself";
        continue;
      }
    }

    AttackResult res{layout, {}};
    res.layout.nets()[jt.guard] = g;
    const int lower = std::min(ts.layer, jt.layer);
    res.layout.add_segment({target, jt.layer, make_point(ax, t - w / 2, c), make_point(ax, t - w / 2 + w, c), w});
    res.layout.add_via({target, lower, attach});
    if (!drc_check(res.layout).empty()) {
      why = "Trojan stub violates spacing";
      continue;
    }
    auto& rec = res.record;
    rec.kind = AttackKind::Jog;
    rec.variant = variant;
    rec.guards = {jt.guard};
    rec.target = target;
    rec.attach = attach;
    rec.stub_layer = jt.layer;
    set_deltas(rec, traced_before, trace_path(g, traced_before->start));
    const Nm want = variant == JogVariant::Lengthening ? 2 * p : 0;
    if (rec.delta_length != want || rec.delta_bends != 4) {
      why = "jog did not produce the intended edit";
      continue;
    }
    return res;
  }
  throw InfeasibleError(why);
}

}  // namespace

AttackResult jog_attack(const Layout& layout, const GuardPlan& plan, const std::string& target, Point attach,
                        JogVariant variant, int guard_layer) {
  const RoutedNet* tn = layout.find_net(target);
  if (!tn || !plan.targets.count(target)) throw LookupError("no target net named '" + target + "'");
  std::optional<std::size_t> tseg;
  for (std::size_t i = 0; i < tn->segments.size() && !tseg; ++i) {
    const auto& s = tn->segments[i];
    const Axis ax = s.axis();
    if (coord(attach, other(ax)) == s.across() && coord(attach, ax) >= s.lo() && coord(attach, ax) <= s.hi())
      tseg = i;
  }
  if (!tseg) throw InfeasibleError("attach point is not on a segment of '" + target + "'");
  const WireSegment& ts = tn->segments[*tseg];

  std::vector<JogTry> tries;
  for (int lg : {ts.layer + 1, ts.layer - 1}) {
    if (!layout.rules().has_layer(lg) || (guard_layer != 0 && lg != guard_layer)) continue;
    for (const auto& g : layout.guard_nets()) {
      const RoutedNet* gn = layout.find_net(g);
      if (!gn) continue;
      for (std::size_t k = 0; k < gn->segments.size(); ++k) {
        const auto& s = gn->segments[k];
        if (s.layer == lg && guards_face_at(layout.rules(), s, ts, coord(attach, ts.axis()))) tries.push_back({g, k, lg});
      }
    }
  }
  if (tries.empty()) throw InfeasibleError("attach point is not guarded on top or bottom");
  std::optional<InfeasibleError> last;
  for (const auto& jt : tries) {
    try {
      return try_jog(layout, target, *tseg, attach, jt, variant);
    } catch (const InfeasibleError& e) {
      last = e;
    }
  }
  throw *last;
}

std::vector<JogSite> jog_sites(const Layout& layout, const GuardPlan& plan) {
  const auto& rules = layout.rules();
  std::vector<JogSite> out;
  for (const auto& target : plan.targets) {
    const RoutedNet* tn = layout.find_net(target);
    if (!tn) continue;
    for (const auto& ts : tn->segments) {
      const Axis ax = ts.axis();
      const Nm c = ts.across();
      for (int lg : {ts.layer + 1, ts.layer - 1}) {
        if (!rules.has_layer(lg)) continue;
        const Nm p = rules.layer(lg).mmp;
        for (const auto& g : layout.guard_nets()) {
          const RoutedNet* gn = layout.find_net(g);
          if (!gn) continue;
          for (const auto& gs : gn->segments) {
            if (gs.layer != lg || !guards_face_at(rules, gs, ts, std::max(gs.lo(), ts.lo()))) continue;
            const Nm lo = std::max(gs.lo(), ts.lo()) + p, hi = std::min(gs.hi(), ts.hi()) - p;
            for (Nm t = nearest_track(rules, lg, lo) - p; t < hi; t += p)
              if (t > lo) out.push_back({target, make_point(ax, t, c), g, lg});
          }
        }
      }
    }
  }
  return out;
}

std::string attack_record_to_json(const AttackRecord& r) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(r.kind);
  j["variant"] = r.variant ? nlohmann::ordered_json(to_string(*r.variant)) : nlohmann::ordered_json(nullptr);
  j["guards"] = r.guards;
  j["target"] = r.target;
  if (r.attach) j["attach_nm"] = {r.attach->x, r.attach->y};
  else j["attach_nm"] = nullptr;
  j["stub_layer"] = r.stub_layer;
  j["delta_length_nm"] = r.delta_length;
  j["delta_bends"] = r.delta_bends;
  j["translation_nm"] = {r.translation.x, r.translation.y};
  return j.dump(2) + "\n";
}

AttackRecord attack_record_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    AttackRecord r;
    r.kind = parse_attack_kind(j.at("kind").get<std::string>());
    if (!j.at("variant").is_null()) r.variant = parse_jog_variant(j.at("variant").get<std::string>());
    r.guards = j.at("guards").get<std::vector<std::string>>();
    r.target = j.at("target").get<std::string>();
    if (!j.at("attach_nm").is_null()) r.attach = Point{j.at("attach_nm").at(0).get<Nm>(), j.at("attach_nm").at(1).get<Nm>()};
    r.stub_layer = j.at("stub_layer").get<int>();
    r.delta_length = j.at("delta_length_nm").get<Nm>();
    r.delta_bends = j.at("delta_bends").get<int>();
    r.translation = {j.at("translation_nm").at(0).get<Nm>(), j.at("translation_nm").at(1).get<Nm>()};
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("attack record: ") + e.what(), 0, 0);
  }
}

}  // namespace shieldroute
