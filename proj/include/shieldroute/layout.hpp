#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "shieldroute/geometry.hpp"
#include "shieldroute/tech.hpp"

namespace shieldroute {

/// Axis-aligned wire on one routing layer. Ends are flush with a and b.
struct WireSegment {
  std::string net;
  int layer = 0;
  Point a, b;
  Nm width = 0;

  friend bool operator==(const WireSegment&, const WireSegment&) = default;

  Axis axis() const { return a.y == b.y ? Axis::X : Axis::Y; }
  Nm length() const { return a.y == b.y ? (a.x > b.x ? a.x - b.x : b.x - a.x) : (a.y > b.y ? a.y - b.y : b.y - a.y); }
  Nm lo() const { return std::min(coord(a, axis()), coord(b, axis())); }
  Nm hi() const { return std::max(coord(a, axis()), coord(b, axis())); }
  Nm across() const { return coord(a, other(axis())); }
  Rect rect() const;
};

/// Cut between `lower_layer` and `lower_layer + 1`, with square landing pads
/// of the default width of each layer.
struct Via {
  std::string net;
  int lower_layer = 0;
  Point at;

  friend bool operator==(const Via&, const Via&) = default;
};

/// Cell occupying a rectangle of placement sites.
struct Placement {
  std::string name;
  int row = 0, col = 0, rows = 1, cols = 1;
  bool locked = false;
  bool fill = false;  // capacitive fill: removable, counts as empty space

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct RoutedNet {
  std::vector<WireSegment> segments;
  std::vector<Via> vias;
  bool locked = false;

  friend bool operator==(const RoutedNet&, const RoutedNet&) = default;
};

enum class ShapeKind : std::uint8_t { Segment, ViaPad };

/// Flattened metal shape on a routing layer.
struct Shape {
  std::string net;
  int layer = 0;
  Rect rect;
  ShapeKind kind = ShapeKind::Segment;
  std::size_t index = 0;  // segment or via index within its net

  friend bool operator==(const Shape&, const Shape&) = default;
};

Rect via_pad(const TechRules& rules, const Via& v, int layer);

class Layout {
 public:
  Layout() = default;
  explicit Layout(std::shared_ptr<const TechRules> rules) : rules_(std::move(rules)) {}

  const TechRules& rules() const { return *rules_; }
  const std::shared_ptr<const TechRules>& rules_ptr() const { return rules_; }

  std::map<std::string, Placement>& placements() { return placements_; }
  const std::map<std::string, Placement>& placements() const { return placements_; }
  std::map<std::string, RoutedNet>& nets() { return nets_; }
  const std::map<std::string, RoutedNet>& nets() const { return nets_; }
  std::set<std::string>& guard_nets() { return guard_nets_; }
  const std::set<std::string>& guard_nets() const { return guard_nets_; }

  const RoutedNet* find_net(std::string_view name) const;

  /// All routing-layer shapes (segments and via pads), in stable order.
  std::vector<Shape> shapes() const;
  std::vector<Shape> net_shapes(const std::string& net) const;

  void add_segment(WireSegment s);
  void add_via(Via v);

  /// Geometric equality (rules compared by value).
  friend bool operator==(const Layout& x, const Layout& y) {
    return *x.rules_ == *y.rules_ && x.placements_ == y.placements_ && x.nets_ == y.nets_ &&
           x.guard_nets_ == y.guard_nets_;
  }

 private:
  std::shared_ptr<const TechRules> rules_;
  std::map<std::string, Placement> placements_;
  std::map<std::string, RoutedNet> nets_;
  std::set<std::string> guard_nets_;
};

/// True when the segment's centerline is not on a track of its layer.
bool is_off_track(const TechRules& rules, const WireSegment& s);

/// Per-layer bucketed index over shapes. Queries are exact: every shape whose
/// rectangle touches the query rectangle is reported, nothing else.
class ShapeIndex {
 public:
  explicit ShapeIndex(const TechRules& rules);
  ShapeIndex(const TechRules& rules, std::vector<Shape> shapes);

  std::size_t insert(Shape s);
  const Shape& shape(std::size_t id) const { return shapes_[id]; }
  std::size_t size() const { return shapes_.size(); }
  bool alive(std::size_t id) const { return alive_[id]; }
  /// Hides a shape from future queries.
  void erase(std::size_t id) { alive_[id] = false; }

  /// Ids of live shapes on `layer` whose rect touches `r` (closed test), ascending.
  std::vector<std::size_t> query(int layer, const Rect& r) const;

 private:
  struct Grid {
    Nm bucket = 1;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
  };
  static Nm floor_div(Nm a, Nm b);

  std::vector<Grid> grids_;
  std::vector<Shape> shapes_;
  std::vector<bool> alive_;
  mutable std::vector<std::size_t> stamp_;
  mutable std::size_t epoch_ = 0;
};

struct DrcViolation {
  Shape a, b;
  Nm distance_sq = 0;
};

/// Every pair of same-layer shapes of different nets closer than the layer's
/// minimum spacing (edge-to-edge Euclidean). Empty means clean.
std::vector<DrcViolation> drc_check(const Layout& layout);

struct LengthStats {
  double mean = 0;    // nm
  double stddev = 0;  // population, nm
  std::size_t count = 0;
};

/// Mean and population standard deviation of per-net wire length over non-guard nets.
LengthStats net_length_stats(const Layout& layout);

/// Total centerline length of a net.
Nm net_length(const RoutedNet& net);

/// Same-layer shapes within Euclidean edge distance `radius` of `shape`
/// (the shape itself excluded).
std::vector<Shape> neighbors(const Layout& layout, const Shape& shape, Nm radius);

/// Structural checks: geometry legal, vias land on segments of their net.
/// Throws Error describing the first problem.
void validate_layout(const Layout& layout);

/// Native text interchange (micrometers, stable ordering).
std::string write_layout(const Layout& layout);
Layout read_layout(std::string_view text, std::shared_ptr<const TechRules> rules);

}  // namespace shieldroute
