#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "shieldroute/geometry.hpp"

namespace shieldroute {

enum class Direction : std::uint8_t { Horizontal, Vertical };

/// Axis along which wires of this direction run.
inline Axis run_axis(Direction d) { return d == Direction::Horizontal ? Axis::X : Axis::Y; }

struct RoutingLayer {
  int index = 0;  // 1 = lowest
  std::string name;
  Nm min_spacing = 0;
  Nm mmp = 0;  // minimal metal pitch, track center to track center
  Nm default_width = 0;  // mmp - min_spacing
  Direction direction = Direction::Horizontal;
  Nm track_offset = 0;

  friend bool operator==(const RoutingLayer&, const RoutingLayer&) = default;
};

/// Process technology: routing layers plus the device-layer placement grid.
/// Immutable once built; share by const reference.
struct TechRules {
  std::vector<RoutingLayer> layers;  // sorted, layers[i].index == i + 1
  Nm site_width = 0;
  Nm site_height = 0;
  int device_rows = 0;
  int device_cols = 0;
  double dielectric_constant = 3.9;

  friend bool operator==(const TechRules&, const TechRules&) = default;

  int layer_count() const { return static_cast<int>(layers.size()); }
  bool has_layer(int index) const { return index >= 1 && index <= layer_count(); }

  /// Throws LookupError for an index outside 1..R.
  const RoutingLayer& layer(int index) const;

  /// Layer index by name, or 0 when no layer carries that name.
  int find_layer(std::string_view name) const;

  Rect site_rect(int row, int col) const {
    return {col * site_width, row * site_height, (col + 1) * site_width, (row + 1) * site_height};
  }
  Rect die_rect() const { return {0, 0, device_cols * site_width, device_rows * site_height}; }
};

/// Parses the line-oriented technology file. Throws ParseError on syntax
/// problems and RuleError when a layer breaks a manufacturing-rule invariant.
TechRules parse_tech(std::string_view text);

/// Writes a technology file that parse_tech reads back to an identical TechRules.
std::string serialize_tech(const TechRules& rules);

/// Checks every TechRules invariant; throws RuleError/Error on the first violation.
void validate(const TechRules& rules);

/// Smallest guard-wire length change a jog on this layer can produce: 2 * mmp.
Nm min_jog_edit(const TechRules& rules, int layer);

/// Coordinate of track `index` on `layer`: offset + index * mmp.
Nm track_position(const TechRules& rules, int layer, Nm index);

/// True when `c` falls exactly on a track of `layer`.
bool on_track(const TechRules& rules, int layer, Nm c);

/// Track coordinate of `layer` nearest to `c` (ties resolve downward).
Nm nearest_track(const TechRules& rules, int layer, Nm c);

}  // namespace shieldroute
