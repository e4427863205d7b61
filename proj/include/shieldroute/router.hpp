#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shieldroute/layout.hpp"

namespace shieldroute {

struct MazeRequest {
  std::string net;
  int from_layer = 0;
  Point from;
  int to_layer = 0;
  Point to;
  int min_layer = 1, max_layer = 1;
  Nm margin = 0;  // search window grows the endpoints' bounding box by this much
};

struct MazePath {
  std::vector<WireSegment> segments;
  std::vector<Via> vias;
  Nm wire_length = 0;
};

/// Legality of a wire rectangle (or via pad) on a layer.
using RectPredicate = std::function<bool(int layer, const Rect& r)>;

/// A* over the track lattice of layers [min_layer, max_layer]: a wire along x
/// needs its y on the layer's track grid, a wire along y needs its x on it.
/// Stacked vias are not produced (every via lands on a wire on both layers).
/// Returns nothing when no legal path exists inside the window.
std::optional<MazePath> maze_route(const TechRules& rules, const MazeRequest& req, const RectPredicate& legal);

}  // namespace shieldroute
