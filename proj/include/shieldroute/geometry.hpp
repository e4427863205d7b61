#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>

namespace shieldroute {

/// Length in integer nanometers. Every on-chip coordinate and distance uses this.
using Nm = std::int64_t;

struct Point {
  Nm x = 0;
  Nm y = 0;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

enum class Axis : std::uint8_t { X, Y };

inline Axis other(Axis a) { return a == Axis::X ? Axis::Y : Axis::X; }

inline Nm coord(const Point& p, Axis a) { return a == Axis::X ? p.x : p.y; }

/// Builds a point from (along, across) coordinates relative to an axis.
inline Point make_point(Axis along, Nm a, Nm c) {
  return along == Axis::X ? Point{a, c} : Point{c, a};
}

/// Closed axis-aligned rectangle [xlo,xhi] x [ylo,yhi].
struct Rect {
  Nm xlo = 0, ylo = 0, xhi = 0, yhi = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
  friend auto operator<=>(const Rect&, const Rect&) = default;

  Nm lo(Axis a) const { return a == Axis::X ? xlo : ylo; }
  Nm hi(Axis a) const { return a == Axis::X ? xhi : yhi; }
  Nm width() const { return xhi - xlo; }
  Nm height() const { return yhi - ylo; }

  Rect expanded(Nm d) const { return {xlo - d, ylo - d, xhi + d, yhi + d}; }
  Rect translated(Nm dx, Nm dy) const { return {xlo + dx, ylo + dy, xhi + dx, yhi + dy}; }

  bool contains(const Point& p) const {
    return p.x >= xlo && p.x <= xhi && p.y >= ylo && p.y <= yhi;
  }
};

/// Rectangle from (along, across) spans.
inline Rect make_rect(Axis along, Nm alo, Nm ahi, Nm clo, Nm chi) {
  return along == Axis::X ? Rect{alo, clo, ahi, chi} : Rect{clo, alo, chi, ahi};
}

/// Closed-set intersection (touching counts).
inline bool touches(const Rect& a, const Rect& b) {
  return a.xlo <= b.xhi && b.xlo <= a.xhi && a.ylo <= b.yhi && b.ylo <= a.yhi;
}

/// Positive-area intersection.
inline bool overlaps(const Rect& a, const Rect& b) {
  return a.xlo < b.xhi && b.xlo < a.xhi && a.ylo < b.yhi && b.ylo < a.yhi;
}

inline Rect bounding(const Rect& a, const Rect& b) {
  return {std::min(a.xlo, b.xlo), std::min(a.ylo, b.ylo), std::max(a.xhi, b.xhi),
          std::max(a.yhi, b.yhi)};
}

/// Per-axis gaps between two rectangles (0 when the projections meet).
inline Nm gap(const Rect& a, const Rect& b, Axis ax) {
  return std::max<Nm>({0, b.lo(ax) - a.hi(ax), a.lo(ax) - b.hi(ax)});
}

/// Squared Euclidean edge-to-edge distance.
inline Nm distance_sq(const Rect& a, const Rect& b) {
  const Nm dx = gap(a, b, Axis::X);
  const Nm dy = gap(a, b, Axis::Y);
  return dx * dx + dy * dy;
}

/// Manhattan edge-to-edge distance.
inline Nm manhattan(const Rect& a, const Rect& b) {
  return gap(a, b, Axis::X) + gap(a, b, Axis::Y);
}

/// Parses a decimal micrometer literal ("0.07", "-1.5", "12") into exact nanometers.
/// Throws std::invalid_argument on malformed text or sub-nanometer precision.
Nm parse_um(std::string_view text);

/// Formats nanometers as micrometers with exactly three decimals.
std::string format_um(Nm v);

}  // namespace shieldroute
