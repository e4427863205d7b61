#include "shieldroute/router.hpp"

#include <cstdint>
#include <limits>
#include <queue>

#include "shieldroute/error.hpp"

namespace shieldroute {

namespace {

// Arrival kind of a search state. Directions are kept so a wire never doubles back on itself.
enum Arrive : std::uint8_t { kStart = 0, kVia = 1, kXNeg = 2, kXPos = 3, kYNeg = 4, kYPos = 5 };
constexpr std::size_t kStates = 6;

bool along_x(Arrive a) { return a == kXNeg || a == kXPos; }
bool along_y(Arrive a) { return a == kYNeg || a == kYPos; }

std::vector<Nm> lattice(const TechRules& rules, int lmin, int lmax, Nm lo, Nm hi, Nm extra1, Nm extra2) {
  std::vector<Nm> v{extra1, extra2};
  for (int l = lmin; l <= lmax; ++l) {
    const auto& rl = rules.layer(l);
    Nm k = (lo - rl.track_offset) / rl.mmp - 1;
    for (Nm c = track_position(rules, l, k); c <= hi; c += rl.mmp)
      if (c >= lo) v.push_back(c);
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::optional<MazePath> maze_route(const TechRules& rules, const MazeRequest& req, const RectPredicate& legal) {
  const int lmin = std::max(1, req.min_layer);
  const int lmax = std::min(rules.layer_count(), req.max_layer);
  if (req.from_layer < lmin || req.from_layer > lmax || req.to_layer < lmin || req.to_layer > lmax)
    throw Error("maze endpoints outside the layer range");
  const Nm xlo = std::min(req.from.x, req.to.x) - req.margin, xhi = std::max(req.from.x, req.to.x) + req.margin;
  const Nm ylo = std::min(req.from.y, req.to.y) - req.margin, yhi = std::max(req.from.y, req.to.y) + req.margin;
  const auto xs = lattice(rules, lmin, lmax, xlo, xhi, req.from.x, req.to.x);
  const auto ys = lattice(rules, lmin, lmax, ylo, yhi, req.from.y, req.to.y);
  const std::size_t nx = xs.size(), ny = ys.size(), nl = static_cast<std::size_t>(lmax - lmin + 1);
  const std::size_t nodes = nl * nx * ny;
  if (nodes * kStates > 60'000'000) return std::nullopt;

  // Track membership per layer per coordinate.
  std::vector<std::vector<char>> x_on(nl), y_on(nl);
  Nm min_pitch = std::numeric_limits<Nm>::max();
  for (std::size_t li = 0; li < nl; ++li) {
    const int l = lmin + static_cast<int>(li);
    min_pitch = std::min(min_pitch, rules.layer(l).mmp);
    x_on[li].resize(nx);
    y_on[li].resize(ny);
    for (std::size_t i = 0; i < nx; ++i) x_on[li][i] = on_track(rules, l, xs[i]);
    for (std::size_t i = 0; i < ny; ++i) y_on[li][i] = on_track(rules, l, ys[i]);
  }
  const Nm via_cost = min_pitch;
  const Nm bend_cost = min_pitch;

  auto idx_of = [](const std::vector<Nm>& v, Nm c) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), c) - v.begin());
  };
  auto node_id = [&](std::size_t li, std::size_t xi, std::size_t yi) { return (li * nx + xi) * ny + yi; };
  const std::size_t src = node_id(static_cast<std::size_t>(req.from_layer - lmin), idx_of(xs, req.from.x), idx_of(ys, req.from.y));
  const std::size_t dst = node_id(static_cast<std::size_t>(req.to_layer - lmin), idx_of(xs, req.to.x), idx_of(ys, req.to.y));

  auto heuristic = [&](std::size_t n) {
    const std::size_t yi = n % ny, xi = (n / ny) % nx, li = n / (nx * ny);
    const std::size_t dli = static_cast<std::size_t>(req.to_layer - lmin);
    const Nm dl = li > dli ? static_cast<Nm>(li - dli) : static_cast<Nm>(dli - li);
    return std::abs(xs[xi] - req.to.x) + std::abs(ys[yi] - req.to.y) + dl * via_cost;
  };

  constexpr Nm kInf = std::numeric_limits<Nm>::max();
  std::vector<Nm> dist(nodes * kStates, kInf);
  std::vector<std::uint32_t> parent(nodes * kStates, std::numeric_limits<std::uint32_t>::max());
  using Item = std::pair<Nm, std::size_t>;  // f, state
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[src * kStates + kStart] = 0;
  open.push({heuristic(src), src * kStates + kStart});
  std::size_t goal = std::numeric_limits<std::size_t>::max();

  while (!open.empty()) {
    const auto [f, st] = open.top();
    open.pop();
    const std::size_t n = st / kStates;
    const auto arrive = static_cast<Arrive>(st % kStates);
    const Nm g = dist[st];
    if (f - heuristic(n) > g) continue;
    if (n == dst) {
      goal = st;
      break;
    }
    const std::size_t yi = n % ny, xi = (n / ny) % nx, li = n / (nx * ny);
    const int l = lmin + static_cast<int>(li);
    const Nm w = rules.layer(l).default_width;

    auto relax = [&](std::size_t nn, Arrive a, Nm cost) {
      const std::size_t ns = nn * kStates + a;
      if (g + cost < dist[ns]) {
        dist[ns] = g + cost;
        parent[ns] = static_cast<std::uint32_t>(st);
        open.push({g + cost + heuristic(nn), ns});
      }
    };

    if (y_on[li][yi]) {
      for (int d : {-1, 1}) {
        if ((d < 0 && xi == 0) || (d > 0 && xi + 1 == nx)) continue;
        if (arrive == (d < 0 ? kXPos : kXNeg)) continue;
        const std::size_t xj = static_cast<std::size_t>(static_cast<long>(xi) + d);
        const Nm a = std::min(xs[xi], xs[xj]), b = std::max(xs[xi], xs[xj]);
        const Rect r = make_rect(Axis::X, a, b, ys[yi] - w / 2, ys[yi] - w / 2 + w);
        if (!legal(l, r)) continue;
        const Nm bend = along_y(arrive) ? bend_cost : 0;
        relax(node_id(li, xj, yi), d < 0 ? kXNeg : kXPos, b - a + bend);
      }
    }
    if (x_on[li][xi]) {
      for (int d : {-1, 1}) {
        if ((d < 0 && yi == 0) || (d > 0 && yi + 1 == ny)) continue;
        if (arrive == (d < 0 ? kYPos : kYNeg)) continue;
        const std::size_t yj = static_cast<std::size_t>(static_cast<long>(yi) + d);
        const Nm a = std::min(ys[yi], ys[yj]), b = std::max(ys[yi], ys[yj]);
        const Rect r = make_rect(Axis::Y, a, b, xs[xi] - w / 2, xs[xi] - w / 2 + w);
        if (!legal(l, r)) continue;
        const Nm bend = along_x(arrive) ? bend_cost : 0;
        relax(node_id(li, xi, yj), d < 0 ? kYNeg : kYPos, b - a + bend);
      }
    }
    if (arrive != kVia) {
      for (int d : {-1, 1}) {
        if ((d < 0 && li == 0) || (d > 0 && li + 1 == nl)) continue;
        const int lo_layer = d < 0 ? l - 1 : l;
        const Via v{req.net, lo_layer, {xs[xi], ys[yi]}};
        if (!legal(lo_layer, via_pad(rules, v, lo_layer)) || !legal(lo_layer + 1, via_pad(rules, v, lo_layer + 1)))
          continue;
        relax(node_id(static_cast<std::size_t>(static_cast<long>(li) + d), xi, yi), kVia, via_cost);
      }
    }
  }
  if (goal == std::numeric_limits<std::size_t>::max()) return std::nullopt;

  std::vector<std::size_t> chain;
  for (std::size_t st = goal;; st = parent[st]) {
    chain.push_back(st);
    if (st == src * kStates + kStart) break;
  }
  std::reverse(chain.begin(), chain.end());

  auto point_of = [&](std::size_t n) { return Point{xs[(n / ny) % nx], ys[n % ny]}; };
  auto layer_of = [&](std::size_t n) { return lmin + static_cast<int>(n / (nx * ny)); };

  MazePath out;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const std::size_t a = chain[i - 1] / kStates, b = chain[i] / kStates;
    const auto kind = static_cast<Arrive>(chain[i] % kStates);
    if (kind == kVia) {
      out.vias.push_back({req.net, std::min(layer_of(a), layer_of(b)), point_of(a)});
      continue;
    }
    const int l = layer_of(a);
    const Point pa = point_of(a), pb = point_of(b);
    auto& segs = out.segments;
    const bool extend = i >= 2 && static_cast<Arrive>(chain[i - 1] % kStates) == kind && !segs.empty();
    if (extend) {
      segs.back().b = pb;
    } else {
      segs.push_back({req.net, l, pa, pb, rules.layer(l).default_width});
    }
  }
  for (const auto& s : out.segments) out.wire_length += s.length();
  return out;
}

}  // namespace shieldroute
