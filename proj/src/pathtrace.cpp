#include <map>
#include <tuple>

#include "shieldroute/guardplan.hpp"

namespace shieldroute {

namespace {

using VKey = std::tuple<int, Nm, Nm>;  // layer, x, y

struct Edge {
  std::size_t u, v;
  bool via;
  int layer;  // wire layer (lower layer for a via)
  Axis axis;
  Nm length;
};

}  // namespace

std::optional<TracedPath> trace_path(const RoutedNet& net, std::optional<Point> prefer_start) {
  if (net.segments.empty()) return std::nullopt;
  const auto& segs = net.segments;

  // Junctions must sit on wire endpoints: no endpoint inside another wire, no
  // overlapping collinear wires.
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t j = 0; j < segs.size(); ++j) {
      if (i == j || segs[i].layer != segs[j].layer) continue;
      const auto& a = segs[i];
      const auto& b = segs[j];
      for (const Point& p : {a.a, a.b}) {
        const Axis bx = b.axis();
        if (coord(p, other(bx)) == b.across() && coord(p, bx) > b.lo() && coord(p, bx) < b.hi()) return std::nullopt;
      }
      if (i < j && a.axis() == b.axis() && a.across() == b.across() && std::min(a.hi(), b.hi()) > std::max(a.lo(), b.lo()))
        return std::nullopt;
    }
  }

  std::map<VKey, std::size_t> ids;
  std::vector<VKey> keys;
  auto vid = [&](int l, Point p) {
    auto [it, fresh] = ids.emplace(VKey{l, p.x, p.y}, keys.size());
    if (fresh) keys.push_back(it->first);
    return it->second;
  };
  std::vector<Edge> edges;
  for (const auto& s : segs) edges.push_back({vid(s.layer, s.a), vid(s.layer, s.b), false, s.layer, s.axis(), s.length()});
  for (const auto& v : net.vias) {
    const bool lower_known = ids.count({v.lower_layer, v.at.x, v.at.y});
    const bool upper_known = ids.count({v.lower_layer + 1, v.at.x, v.at.y});
    if (!lower_known || !upper_known) return std::nullopt;  // via not on wire endpoints
    edges.push_back({vid(v.lower_layer, v.at), vid(v.lower_layer + 1, v.at), true, v.lower_layer, Axis::X, 0});
  }

  const std::size_t nv = keys.size();
  if (edges.size() + 1 != nv) return std::nullopt;  // a simple path is a tree with two leaves
  std::vector<std::vector<std::size_t>> adj(nv);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].u].push_back(e);
    adj[edges[e].v].push_back(e);
  }
  std::vector<std::size_t> leaves;
  for (std::size_t v = 0; v < nv; ++v) {
    if (adj[v].size() > 2 || adj[v].empty()) return std::nullopt;
    if (adj[v].size() == 1) leaves.push_back(v);
  }
  if (leaves.size() != 2) return std::nullopt;

  auto pt = [&](std::size_t v) { return Point{std::get<1>(keys[v]), std::get<2>(keys[v])}; };
  std::size_t start = leaves[0];
  if (prefer_start) {
    const Nm d0 = std::abs(pt(leaves[0]).x - prefer_start->x) + std::abs(pt(leaves[0]).y - prefer_start->y);
    const Nm d1 = std::abs(pt(leaves[1]).x - prefer_start->x) + std::abs(pt(leaves[1]).y - prefer_start->y);
    if (d1 < d0) start = leaves[1];
  }
  const std::size_t finish = start == leaves[0] ? leaves[1] : leaves[0];

  TracedPath out;
  out.start = pt(start);
  out.start_layer = std::get<0>(keys[start]);
  out.end = pt(finish);
  out.end_layer = std::get<0>(keys[finish]);

  std::size_t cur = start, came = edges.size();
  std::size_t visited = 0;
  bool have_run = false, pending_via = false;
  int run_layer = 0;
  Axis run_axis_ = Axis::X;
  while (true) {
    std::size_t next_edge = edges.size();
    for (std::size_t e : adj[cur])
      if (e != came) next_edge = e;
    if (next_edge == edges.size()) break;
    const Edge& e = edges[next_edge];
    const std::size_t nxt = e.u == cur ? e.v : e.u;
    ++visited;
    if (e.via) {
      pending_via = true;
    } else {
      const bool continues = have_run && !pending_via && e.layer == run_layer && e.axis == run_axis_;
      if (continues) {
        out.runs.back() += e.length;
      } else {
        if (have_run) {
          PathFeature f;
          f.kind = pending_via ? PathFeature::Kind::LayerChange : PathFeature::Kind::Bend;
          f.position = out.length;
          f.at = pt(cur);
          f.layer_from = run_layer;
          f.layer_to = e.layer;
          out.features.push_back(f);
        }
        out.runs.push_back(e.length);
        have_run = true;
        run_layer = e.layer;
        run_axis_ = e.axis;
      }
      pending_via = false;
      out.length += e.length;
    }
    came = next_edge;
    cur = nxt;
  }
  if (visited != edges.size()) return std::nullopt;  // disconnected pieces
  return out;
}

Nm coupling_length(const TechRules& rules, const RoutedNet& guard, const RoutedNet& target) {
  Nm total = 0;
  for (const auto& g : guard.segments) {
    for (const auto& t : target.segments) {
      if (g.axis() != t.axis()) continue;
      const Nm overlap = std::min(g.hi(), t.hi()) - std::max(g.lo(), t.lo());
      if (overlap <= 0) continue;
      const int dl = g.layer - t.layer;
      if (dl == 0) {
        const Nm d = std::abs(g.across() - t.across());
        if (d > 0 && d <= rules.layer(g.layer).mmp) total += overlap;
      } else if (dl == 1 || dl == -1) {
        if (gap(g.rect(), t.rect(), other(g.axis())) <= rules.layer(g.layer).min_spacing) total += overlap;
      }
    }
  }
  return total;
}

}  // namespace shieldroute
