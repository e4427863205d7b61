#include "shieldroute/guardplan.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <tuple>
#include <sstream>

#include "shieldroute/error.hpp"
#include "shieldroute/router.hpp"
#include "text_scan.hpp"

namespace shieldroute {

std::string to_string(GuardArchitecture a) {
  switch (a) {
    case GuardArchitecture::FullyDisjoint: return "fully_disjoint";
    case GuardArchitecture::PartiallyConnected: return "partially_connected";
    case GuardArchitecture::FullyConnected: return "fully_connected";
  }
  return "?";
}

GuardArchitecture parse_architecture(std::string_view s) {
  if (s == "fully_disjoint") return GuardArchitecture::FullyDisjoint;
  if (s == "partially_connected") return GuardArchitecture::PartiallyConnected;
  if (s == "fully_connected") return GuardArchitecture::FullyConnected;
  throw Error("unknown guard architecture '" + std::string(s) +
              "' (expected fully_disjoint, partially_connected or fully_connected)");
}

const GuardNetPlan* GuardPlan::find(std::string_view name) const {
  for (const auto& g : guards)
    if (g.name == name) return &g;
  return nullptr;
}

namespace {

struct Piece {
  std::string target;
  std::size_t segment = 0;
  Face face = Face::Top;
  WireSegment wire;
  std::size_t index_in_guard = 0;  // segment index once moved into its guard net
};

struct Span {
  Nm lo, hi;
};

std::string guard_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "guard_%04zu", i);
  return buf;
}

class Planner {
 public:
  Planner(const Layout& in, const PlanOptions& opt)
      : lay_(in), rules_(lay_.rules()), opt_(opt), index_(rules_, lay_.shapes()), scanner_(lay_) {}

  PlannedLayout run(const std::set<std::string>& targets) {
    for (const auto& t : targets) {
      const RoutedNet* n = lay_.find_net(t);
      if (!n || n->segments.empty()) throw LookupError("target net '" + t + "' is not routed");
      for (const auto& s : n->segments)
        if (s.layer >= rules_.layer_count())
          throw InfeasibleError("uncoverable: target '" + t + "' has a wire on the top routing layer, whose top face has no layer above it");
    }
    for (const auto& t : targets) {
      const std::size_t nseg = lay_.find_net(t)->segments.size();
      for (std::size_t i = 0; i < nseg; ++i) cover_segment(t, i);
    }
    for (const auto& t : targets) lay_.nets()[t].locked = true;

    auto groups = group_pieces();
    PlannedLayout out{Layout(lay_.rules_ptr()), GuardPlan{}};
    out.plan.architecture = opt_.architecture;
    out.plan.targets = targets;
    assign_names(groups);
    index_ = ShapeIndex(rules_, lay_.shapes());
    for (std::size_t g = 0; g < groups.size(); ++g) connect(guard_name(g), groups[g]);

    for (std::size_t g = 0; g < groups.size(); ++g) {
      const std::string name = guard_name(g);
      auto& net = lay_.nets()[name];
      net.locked = true;
      lay_.guard_nets().insert(name);
      GuardNetPlan gp;
      gp.name = name;
      gp.terminals = terminals_[g];
      gp.terminal_layers = terminal_layers_[g];
      auto traced = trace_path(net, gp.terminals[0]);
      if (!traced) throw Error("internal: guard net " + name + " is not a simple path");
      gp.golden = *traced;
      for (const auto& t : targets) {
        const Nm c = coupling_length(rules_, net, *lay_.find_net(t));
        if (c > 0) gp.designed_coupling[t] = c;
      }
      gp.geometry = net;
      out.plan.guards.push_back(std::move(gp));
    }
    if (!drc_check(lay_).empty()) throw Error("internal: guard planning produced a spacing violation");
    out.layout = lay_;
    return out;
  }

 private:
  // Track coordinate at least `dist` away from `c` on the requested side.
  Nm track_beyond(int layer, Nm c, Nm dist, bool high) const {
    const auto& rl = rules_.layer(layer);
    const Nm want = high ? c + dist : c - dist;
    const Nm t = nearest_track(rules_, layer, want);
    if (high && t < want) return t + rl.mmp;
    if (!high && t > want) return t - rl.mmp;
    return t;
  }

  // Sub-spans of [a, b] where a wire of the layer's default width on track
  // `across` keeps min spacing from every existing shape.
  std::vector<Span> free_spans(int layer, Axis ax, Nm across, Nm a, Nm b) const {
    const auto& rl = rules_.layer(layer);
    const Nm w = rl.default_width, s = rl.min_spacing;
    const Rect g = make_rect(ax, a, b, across - w / 2, across - w / 2 + w);
    std::vector<Span> forbidden;
    for (std::size_t id : index_.query(layer, g.expanded(s))) {
      const Rect& r = index_.shape(id).rect;
      if (gap(r, g, other(ax)) >= s) continue;
      forbidden.push_back({r.lo(ax) - s, r.hi(ax) + s});
    }
    std::sort(forbidden.begin(), forbidden.end(), [](const Span& x, const Span& y) { return x.lo < y.lo; });
    std::vector<Span> out;
    Nm cursor = a;
    for (const auto& f : forbidden) {
      if (f.lo > cursor) out.push_back({cursor, std::min(f.lo, b)});
      cursor = std::max(cursor, f.hi);
      if (cursor >= b) break;
    }
    if (cursor < b) out.push_back({cursor, b});
    std::erase_if(out, [&](const Span& sp) { return sp.hi - sp.lo < w; });
    return out;
  }

  void add_piece(const std::string& target, std::size_t seg, Face face, int layer, Axis ax, Nm across, Span sp) {
    const std::string tmp = "__piece_" + std::to_string(pieces_.size());
    WireSegment w{tmp, layer, make_point(ax, sp.lo, across), make_point(ax, sp.hi, across),
                  rules_.layer(layer).default_width};
    lay_.add_segment(w);
    const Shape sh{tmp, layer, w.rect(), ShapeKind::Segment, 0};
    index_.insert(sh);
    scanner_.insert(sh);
    pieces_.push_back({target, seg, face, w, 0});
  }

  void cover_segment(const std::string& t, std::size_t i) {
    const WireSegment seg = lay_.find_net(t)->segments[i];
    const Axis ax = seg.axis();
    const Nm c = seg.across();
    const int r = seg.layer;
    const auto& rl = rules_.layer(r);

    SegmentExposure ex = scanner_.scan(t, i);
    for (Face f : {Face::LateralLow, Face::LateralHigh, Face::Top, Face::Bottom}) {
      for (const Interval& iv : ex.open(f)) {
        int gl = r;
        Nm gc = 0, ext = 0;
        if (f == Face::LateralLow || f == Face::LateralHigh) {
          gc = track_beyond(r, c, rl.mmp, f == Face::LateralHigh);
          ext = rl.mmp;
        } else {
          gl = f == Face::Top ? r + 1 : r - 1;
          if (gl < 1) {
            throw InfeasibleError("uncoverable: bottom face of '" + t + "' segment " + std::to_string(i) +
                                  " on layer 1 faces the device layer");
          }
          const auto& gr = rules_.layer(gl);
          gc = nearest_track(rules_, gl, c);
          ext = gr.min_spacing + gr.default_width;
        }
        for (const Span& sp : free_spans(gl, ax, gc, iv.lo - ext, iv.hi + ext)) add_piece(t, i, f, gl, ax, gc, sp);
      }
    }
    ex = scanner_.scan(t, i);
    for (Face f : {Face::EndLow, Face::EndHigh}) {
      if (ex.open(f).empty()) continue;
      const bool high = f == Face::EndHigh;
      const Nm w = rl.default_width, s = rl.min_spacing;
      const Span cap = high ? Span{seg.hi() + s, seg.hi() + s + w} : Span{seg.lo() - s - w, seg.lo() - s};
      const auto spans = free_spans(r, ax, c, cap.lo, cap.hi);
      if (spans.size() == 1 && spans[0].lo == cap.lo && spans[0].hi == cap.hi) add_piece(t, i, f, r, ax, c, cap);
    }
    ex = scanner_.scan(t, i);
    for (Face f : kAllFaces) {
      if (ex.open(f).empty()) continue;
      const auto& iv = ex.open(f).front();
      throw InfeasibleError("uncoverable: net '" + t + "' segment " + std::to_string(i) + " face " + face_name(f) +
                            " stays open at [" + format_um(iv.lo) + ", " + format_um(iv.hi) +
                            "] um (guard track occupied)");
    }
  }

  std::vector<std::vector<std::size_t>> group_pieces() const {
    std::vector<std::vector<std::size_t>> groups;
    switch (opt_.architecture) {
      case GuardArchitecture::FullyDisjoint:
        for (std::size_t p = 0; p < pieces_.size(); ++p) groups.push_back({p});
        break;
      case GuardArchitecture::FullyConnected:
        if (!pieces_.empty()) {
          groups.emplace_back();
          for (std::size_t p = 0; p < pieces_.size(); ++p) groups.back().push_back(p);
        }
        break;
      case GuardArchitecture::PartiallyConnected: {
        std::map<std::pair<std::string, std::size_t>, std::size_t> slot;
        for (std::size_t p = 0; p < pieces_.size(); ++p) {
          const auto& pc = pieces_[p];
          if (!opt_.partial_group.count(pc.face)) {
            groups.push_back({p});
            continue;
          }
          auto [it, fresh] = slot.emplace(std::pair{pc.target, pc.segment}, groups.size());
          if (fresh) groups.emplace_back();
          groups[it->second].push_back(p);
        }
        break;
      }
    }
    return groups;
  }

  void assign_names(const std::vector<std::vector<std::size_t>>& groups) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const std::string name = guard_name(g);
      if (lay_.find_net(name)) throw Error("net name '" + name + "' already used by the design");
      auto& net = lay_.nets()[name];
      for (std::size_t p : groups[g]) {
        auto& pc = pieces_[p];
        lay_.nets().erase("__piece_" + std::to_string(p));
        pc.wire.net = name;
        pc.index_in_guard = net.segments.size();
        net.segments.push_back(pc.wire);
      }
    }
  }

  bool try_route(const std::string& name, const Piece& src, const Point& from, const Piece& dst, const Point& to,
                 Nm margin) {
    const int lmin = std::max(1, std::min(src.wire.layer, dst.wire.layer) - 1);
    const int lmax = std::min(rules_.layer_count(), std::max(src.wire.layer, dst.wire.layer) + 1);
    MazeRequest req{name, src.wire.layer, from, dst.wire.layer, to, lmin, lmax, margin};

    struct End {
      std::size_t index;
      Point at;
      const WireSegment* wire;
    };
    const End ends[2] = {{src.index_in_guard, from, &src.wire}, {dst.index_in_guard, to, &dst.wire}};

    auto legal = [&](int l, const Rect& r) {
      const Nm s = rules_.layer(l).min_spacing;
      for (std::size_t id : index_.query(l, r.expanded(s))) {
        const Shape& sh = index_.shape(id);
        const End* end = nullptr;
        if (sh.net == name && sh.kind == ShapeKind::Segment)
          for (const auto& e : ends)
            if (e.index == sh.index) end = &e;
        if (!end) {
          if (distance_sq(r, sh.rect) < s * s) return false;
          continue;
        }
        // Attachment piece: contact only within the pad square at the end,
        // spacing against the rest of the piece.
        const Nm w = end->wire->width;
        const Rect pad{end->at.x - w / 2, end->at.y - w / 2, end->at.x - w / 2 + w, end->at.y - w / 2 + w};
        if (overlaps(r, sh.rect)) {
          const Rect in{std::max(r.xlo, sh.rect.xlo), std::max(r.ylo, sh.rect.ylo), std::min(r.xhi, sh.rect.xhi),
                        std::min(r.yhi, sh.rect.yhi)};
          if (in.xlo < pad.xlo || in.ylo < pad.ylo || in.xhi > pad.xhi || in.yhi > pad.yhi) return false;
        }
        const Axis ax = end->wire->axis();
        const Nm zone = s + w;
        const bool at_hi = coord(end->at, ax) == end->wire->hi();
        const Nm lo = at_hi ? end->wire->lo() : end->wire->lo() + zone;
        const Nm hi = at_hi ? end->wire->hi() - zone : end->wire->hi();
        if (hi <= lo) continue;
        const Rect trimmed = make_rect(ax, lo, hi, sh.rect.lo(other(ax)), sh.rect.hi(other(ax)));
        if (distance_sq(r, trimmed) < s * s) return false;
      }
      return true;
    };

    auto path = maze_route(rules_, req, legal);
    if (!path) return false;
    auto& net = lay_.nets()[name];
    for (auto& s : path->segments) {
      index_.insert(Shape{name, s.layer, s.rect(), ShapeKind::Segment, net.segments.size()});
      net.segments.push_back(std::move(s));
    }
    for (auto& v : path->vias) {
      for (int l : {v.lower_layer, v.lower_layer + 1})
        index_.insert(Shape{name, l, via_pad(rules_, v, l), ShapeKind::ViaPad, net.vias.size()});
      net.vias.push_back(std::move(v));
    }
    return true;
  }

  void connect(const std::string& name, const std::vector<std::size_t>& group) {
    // Greedy chaining can wall itself in; retry from other starting pieces before giving up.
    const RoutedNet saved = lay_.nets()[name];
    const std::size_t tries = group.size() == 1 ? 1 : 2 * std::min<std::size_t>(group.size(), 2);
    for (std::size_t t = 0; t < tries; ++t) {
      if (chain(name, group, t / 2, t % 2 == 1)) return;
      lay_.nets()[name] = saved;
      index_ = ShapeIndex(rules_, lay_.shapes());
    }
    throw InfeasibleError("architecture infeasible: no legal jumper joins the pieces of " + name + " (" +
                          to_string(opt_.architecture) + ")");
  }

  bool chain(const std::string& name, const std::vector<std::size_t>& group, std::size_t start, bool flip) {
    const Piece& first = pieces_[group[start]];
    auto manhattan_pt = [](Point a, Point b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); };
    std::vector<char> used(group.size(), 0);
    used[start] = 1;

    // Leave the end of the first piece that is farther from everything as a terminal.
    Point head = first.wire.a, tail = first.wire.b;
    if (group.size() > 1) {
      Nm da = std::numeric_limits<Nm>::max(), db = da;
      for (std::size_t k = 0; k < group.size(); ++k) {
        if (k == start) continue;
        const auto& w = pieces_[group[k]].wire;
        for (Point e : {w.a, w.b}) {
          da = std::min(da, manhattan_pt(first.wire.a, e));
          db = std::min(db, manhattan_pt(first.wire.b, e));
        }
      }
      if ((da < db) != flip) std::swap(head, tail);
    }
    // The chain grows from either end, so a piece with one boxed-in end can still sit at a terminal.
    std::array<Point, 2> front{tail, head};
    std::array<const Piece*, 2> front_piece{&first, &first};

    Nm max_pitch = 0;
    for (const auto& l : rules_.layers) max_pitch = std::max(max_pitch, l.mmp);
    for (std::size_t done = 1; done < group.size(); ++done) {
      struct Cand {
        Nm d;
        int side;
        std::size_t k;
        bool at_a;
      };
      std::vector<Cand> cands;
      for (int side = 0; side < 2; ++side) {
        for (std::size_t k = 0; k < group.size(); ++k) {
          if (used[k]) continue;
          const auto& w = pieces_[group[k]].wire;
          const Nm dl = std::abs(w.layer - front_piece[side]->wire.layer) * max_pitch;
          cands.push_back({manhattan_pt(front[side], w.a) + dl, side, k, true});
          cands.push_back({manhattan_pt(front[side], w.b) + dl, side, k, false});
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        return std::tie(x.d, x.side, x.k, x.at_a) < std::tie(y.d, y.side, y.k, y.at_a);
      });
      bool ok = false;
      const Nm base = 4 * std::min(max_pitch, 4 * rules_.layer(front_piece[0]->wire.layer).mmp);
      for (Nm margin : {base, base * 4, base * 16}) {
        for (std::size_t ci = 0; ci < cands.size() && ci < 12 && !ok; ++ci) {
          const auto& cd = cands[ci];
          const Piece& dst = pieces_[group[cd.k]];
          const Point to = cd.at_a ? dst.wire.a : dst.wire.b;
          if (try_route(name, *front_piece[cd.side], front[cd.side], dst, to, margin)) {
            ok = true;
            used[cd.k] = 1;
            front_piece[cd.side] = &dst;
            front[cd.side] = cd.at_a ? dst.wire.b : dst.wire.a;
          }
        }
        if (ok) break;
      }
      if (!ok) return false;
    }
    terminals_.push_back({front[1], front[0]});
    terminal_layers_.push_back({front_piece[1]->wire.layer, front_piece[0]->wire.layer});
    return true;
  }

  Layout lay_;
  const TechRules& rules_;
  PlanOptions opt_;
  ShapeIndex index_;
  ExposureScanner scanner_;
  std::vector<Piece> pieces_;
  std::vector<std::array<Point, 2>> terminals_;
  std::vector<std::array<int, 2>> terminal_layers_;
};

}  // namespace

PlannedLayout plan_guards(const Layout& layout, const ExposureReport& exposure, const PlanOptions& options) {
  std::set<std::string> targets;
  for (const auto& [name, ne] : exposure.nets) targets.insert(name);
  for (const auto& g : layout.guard_nets())
    if (targets.count(g)) throw Error("guard net '" + g + "' cannot be a target");
  Planner planner(layout, options);
  return planner.run(targets);
}

// ---------------------------------------------------------------------------
// Existing-net candidates

namespace {

Layout restricted(const Layout& layout, const std::set<std::string>& keep) {
  Layout out(layout.rules_ptr());
  out.placements() = layout.placements();
  for (const auto& k : keep)
    if (const RoutedNet* n = layout.find_net(k)) out.nets()[k] = *n;
  return out;
}

Nm blocked_weight(const ExposureReport& r) { return r.total_weight - r.open_weight; }

}  // namespace

CandidateReport select_existing_candidates(const Netlist& netlist, const Layout& layout,
                                           const std::set<std::string>& targets,
                                           const CandidateConstraints& constraints) {
  CandidateReport rep;
  const auto baseline = scan_exposure(restricted(layout, targets), targets);
  rep.baseline_blockage = baseline.blocked_fraction();
  const Nm base_blocked = blocked_weight(baseline);

  // Region where a shape could touch any target halo.
  Nm reach = 0;
  for (const auto& l : layout.rules().layers) reach = std::max(reach, l.mmp + l.min_spacing);
  std::vector<Rect> target_boxes;
  for (const auto& t : targets)
    for (const auto& s : layout.find_net(t)->segments) target_boxes.push_back(s.rect().expanded(2 * reach));

  std::set<std::string> chosen;
  for (const auto& [name, net] : layout.nets()) {
    if (targets.count(name) || layout.guard_nets().count(name) || net.segments.empty()) continue;
    if (!constraints.layers.empty()) {
      bool all = true;
      for (const auto& s : net.segments) all = all && constraints.layers.count(s.layer);
      if (!all) continue;
    }
    if (net_length(net) < constraints.min_length) continue;
    if (constraints.require_timing_critical) {
      const auto id = netlist.find_net(name);
      if (!id || !netlist.net(*id).timing_critical) continue;
    }
    bool near = false;
    for (const auto& s : net.segments)
      for (const auto& b : target_boxes) near = near || touches(s.rect(), b);
    if (!near) continue;
    auto keep = targets;
    keep.insert(name);
    const Nm w = blocked_weight(scan_exposure(restricted(layout, keep), targets)) - base_blocked;
    if (w <= 0) continue;
    rep.ranked.push_back({name, w});
    chosen.insert(name);
  }
  std::sort(rep.ranked.begin(), rep.ranked.end(), [](const Candidate& a, const Candidate& b) {
    return a.blocked_weight != b.blocked_weight ? a.blocked_weight > b.blocked_weight : a.net < b.net;
  });
  auto keep = targets;
  keep.insert(chosen.begin(), chosen.end());
  rep.achievable_blockage = scan_exposure(restricted(layout, keep), targets).blocked_fraction();
  return rep;
}

// ---------------------------------------------------------------------------
// Interchange

std::string write_guard_plan(const GuardPlan& plan) {
  std::ostringstream out;
  out << "guardplan 1\n";
  out << "architecture " << to_string(plan.architecture) << '\n';
  for (const auto& t : plan.targets) out << "target " << t << '\n';
  for (const auto& g : plan.guards) {
    out << "guard " << g.name;
    for (int k = 0; k < 2; ++k)
      out << ' ' << g.terminal_layers[k] << ' ' << format_um(g.terminals[k].x) << ' ' << format_um(g.terminals[k].y);
    out << '\n';
    for (const auto& s : g.geometry.segments)
      out << "segment " << g.name << ' ' << s.layer << ' ' << format_um(s.a.x) << ' ' << format_um(s.a.y) << ' '
          << format_um(s.b.x) << ' ' << format_um(s.b.y) << ' ' << format_um(s.width) << '\n';
    for (const auto& v : g.geometry.vias)
      out << "via " << g.name << ' ' << v.lower_layer << ' ' << format_um(v.at.x) << ' ' << format_um(v.at.y) << '\n';
    out << "golden " << g.name << ' ' << format_um(g.golden.length) << ' ' << g.golden.features.size() << '\n';
    for (const auto& f : g.golden.features)
      out << "feature " << g.name << ' ' << (f.kind == PathFeature::Kind::Bend ? "bend" : "layer") << ' '
          << format_um(f.position) << ' ' << format_um(f.at.x) << ' ' << format_um(f.at.y) << ' ' << f.layer_from
          << ' ' << f.layer_to << '\n';
    for (const auto& [t, c] : g.designed_coupling)
      out << "coupling " << g.name << ' ' << t << ' ' << format_um(c) << '\n';
  }
  return out.str();
}

GuardPlan read_guard_plan(std::string_view text) {
  GuardPlan plan;
  detail::LineScanner scan(text);
  bool header = false;
  struct Declared {
    Nm length = 0;
    std::size_t features = 0;
    std::vector<PathFeature> listed;
    bool seen = false;
  };
  std::map<std::string, Declared> declared;
  auto guard_at = [&](std::size_t tok) -> GuardNetPlan& {
    const std::string name(scan.at(tok));
    for (auto& g : plan.guards)
      if (g.name == name) return g;
    scan.fail("record for undeclared guard '" + name + "'", tok);
  };
  while (scan.next_line()) {
    const auto kw = scan.at(0);
    if (!header) {
      if (kw != "guardplan" || scan.tokens().size() != 2 || scan.at(1) != "1") scan.fail("expected header 'guardplan 1'");
      header = true;
      continue;
    }
    if (kw == "architecture") {
      try {
        plan.architecture = parse_architecture(scan.at(1));
      } catch (const Error& e) {
        scan.fail(e.what(), 1);
      }
    } else if (kw == "target") {
      plan.targets.insert(std::string(scan.at(1)));
    } else if (kw == "guard") {
      if (scan.tokens().size() != 8) scan.fail("expected: guard <name> <layer> <x> <y> <layer> <x> <y>");
      GuardNetPlan g;
      g.name = std::string(scan.at(1));
      if (plan.find(g.name)) scan.fail("duplicate guard", 1);
      for (int k = 0; k < 2; ++k) {
        g.terminal_layers[k] = static_cast<int>(scan.integer(2 + 3 * k));
        g.terminals[k] = {scan.length(3 + 3 * k), scan.length(4 + 3 * k)};
      }
      plan.guards.push_back(std::move(g));
    } else if (kw == "segment") {
      if (scan.tokens().size() != 8) scan.fail("expected: segment <guard> <layer> <x1> <y1> <x2> <y2> <width>");
      auto& g = guard_at(1);
      WireSegment s{g.name, static_cast<int>(scan.integer(2)), {scan.length(3), scan.length(4)},
                    {scan.length(5), scan.length(6)}, scan.length(7)};
      if ((s.a.x != s.b.x && s.a.y != s.b.y) || s.a == s.b || s.width <= 0) scan.fail("malformed segment", 3);
      g.geometry.segments.push_back(s);
    } else if (kw == "via") {
      if (scan.tokens().size() != 5) scan.fail("expected: via <guard> <lower_layer> <x> <y>");
      auto& g = guard_at(1);
      g.geometry.vias.push_back({g.name, static_cast<int>(scan.integer(2)), {scan.length(3), scan.length(4)}});
    } else if (kw == "golden") {
      if (scan.tokens().size() != 4) scan.fail("expected: golden <guard> <length> <feature_count>");
      auto& d = declared[std::string(guard_at(1).name)];
      d.length = scan.length(2);
      d.features = static_cast<std::size_t>(scan.integer(3));
      d.seen = true;
    } else if (kw == "feature") {
      if (scan.tokens().size() != 8) scan.fail("expected: feature <guard> <bend|layer> <pos> <x> <y> <from> <to>");
      guard_at(1);
      PathFeature f;
      if (scan.at(2) == "bend") f.kind = PathFeature::Kind::Bend;
      else if (scan.at(2) == "layer") f.kind = PathFeature::Kind::LayerChange;
      else scan.fail("feature kind must be bend or layer", 2);
      f.position = scan.length(3);
      f.at = {scan.length(4), scan.length(5)};
      f.layer_from = static_cast<int>(scan.integer(6));
      f.layer_to = static_cast<int>(scan.integer(7));
      declared[std::string(scan.at(1))].listed.push_back(f);
    } else if (kw == "coupling") {
      if (scan.tokens().size() != 4) scan.fail("expected: coupling <guard> <target> <length>");
      guard_at(1).designed_coupling[std::string(scan.at(2))] = scan.length(3);
    } else {
      scan.fail("unknown record '" + std::string(kw) + "'");
    }
  }
  if (!header) throw ParseError("empty guard plan", 1);
  for (auto& g : plan.guards) {
    const auto& d = declared[g.name];
    if (!d.seen) throw ParseError("guard '" + g.name + "' has no golden record", scan.line());
    auto traced = trace_path(g.geometry, g.terminals[0]);
    if (!traced) throw ParseError("guard '" + g.name + "' geometry is not a two-terminal path", scan.line());
    if (traced->length != d.length || traced->features.size() != d.features || traced->features != d.listed)
      throw ParseError("guard '" + g.name + "' golden record disagrees with its geometry", scan.line());
    g.golden = *traced;
    g.geometry.locked = true;
  }
  return plan;
}

}  // namespace shieldroute
