#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "shieldroute/layout.hpp"

namespace shieldroute {

enum class Face : std::uint8_t { LateralLow, LateralHigh, EndLow, EndHigh, Top, Bottom };

inline constexpr std::array<Face, 6> kAllFaces{Face::LateralLow, Face::LateralHigh, Face::EndLow,
                                               Face::EndHigh,    Face::Top,         Face::Bottom};

const char* face_name(Face f);
inline bool is_end_face(Face f) { return f == Face::EndLow || f == Face::EndHigh; }

/// Half-open span [lo, hi) along a segment axis, nm.
struct Interval {
  Nm lo = 0, hi = 0;
  Nm length() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Unblocked intervals of one segment. End faces are points: when open they
/// report the one-unit interval at their tip ([lo, lo+1) or [hi-1, hi)).
struct SegmentExposure {
  std::string net;
  std::size_t segment = 0;
  int layer = 0;
  Axis axis = Axis::X;
  Nm lo = 0, hi = 0;  // along-axis extent
  Nm across = 0;
  std::array<std::vector<Interval>, 6> unblocked;

  const std::vector<Interval>& open(Face f) const { return unblocked[static_cast<std::size_t>(f)]; }
  /// Each long face weighs its length; each end face weighs 1 nm.
  Nm total_weight() const { return 4 * (hi - lo) + 2; }
  Nm open_weight() const;
};

struct NetExposure {
  std::vector<SegmentExposure> segments;
  Nm total_weight = 0;
  Nm open_weight = 0;
  double blocked_fraction() const {
    return total_weight == 0 ? 1.0 : 1.0 - static_cast<double>(open_weight) / static_cast<double>(total_weight);
  }
};

struct ExposureReport {
  std::map<std::string, NetExposure> nets;
  Nm total_weight = 0;
  Nm open_weight = 0;
  double blocked_fraction() const {
    return total_weight == 0 ? 1.0 : 1.0 - static_cast<double>(open_weight) / static_cast<double>(total_weight);
  }
  bool fully_blocked() const { return open_weight == 0; }
};

/// Incremental scanner: shapes added to the layout after construction must
/// also be passed to insert().
class ExposureScanner {
 public:
  explicit ExposureScanner(const Layout& layout);
  void insert(const Shape& s) { index_.insert(s); }
  SegmentExposure scan(const std::string& net, std::size_t segment) const;

 private:
  std::vector<Rect> adjacent_hits(int layer, const Rect& q) const;

  const Layout& layout_;
  const TechRules& rules_;
  ShapeIndex index_;
  std::vector<Rect> device_;
};

/// Window-scan exposure of every segment of every target net. A point t of a
/// face is blocked when a shape other than the segment itself touches the
/// halo window around t: same layer for lateral and end faces, layer r+1 / r-1
/// for top / bottom (device placements below layer 1; nothing above layer R).
/// Halo depth and window half-width are the min spacing of the halo's layer.
ExposureReport scan_exposure(const Layout& layout, const std::set<std::string>& targets);

/// Brute-force sampling reference with the same semantics. `resolution` (nm)
/// must be even and at most a quarter of every layer's min spacing.
ExposureReport voxel_oracle(const Layout& layout, const std::set<std::string>& targets, Nm resolution);

/// JSON keyed net -> segment -> face -> [[lo_um, hi_um], ...].
std::string exposure_to_json(const ExposureReport& report);

}  // namespace shieldroute
