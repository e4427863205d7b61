#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shieldroute/exposure.hpp"
#include "shieldroute/layout.hpp"

namespace shieldroute {

/// Contiguous (4-connected) group of empty placement sites; fill cells count as empty.
struct TriggerGroup {
  int size = 0;
  std::vector<std::pair<int, int>> sites;  // (row, col), row-major order
};

struct TriggerSpace {
  std::vector<TriggerGroup> groups;  // ordered by first site in row-major order
  std::map<int, int> histogram;      // group size -> number of groups
  int empty_sites = 0;
};

TriggerSpace trigger_space(const Layout& layout);

/// 100 x blocked fraction. Throws Error for an empty target set.
double net_blockage(const ExposureReport& report);

/// One unblocked interval of one face, flattened to the die plane.
struct ExposurePoint {
  std::string net;
  std::size_t segment = 0;
  Face face = Face::Top;
  int layer = 0;
  Interval interval;
  Rect footprint;  // centerline stretch of the interval
};

struct DistancePair {
  std::size_t point = 0;
  std::size_t group = 0;
  Nm distance = 0;  // planar Manhattan, nm (plus the via penalty per layer)
  double z = 0;     // (distance - mean) / stddev, or raw um when stddev is 0
};

struct RouteDistanceHeatmap {
  double mean_len = 0, stddev_len = 0;  // nm
  bool raw_distances = false;           // stddev was 0; bins hold distances in um
  std::vector<int> size_edges;          // lower edges of trigger-size bins: 1, 2, 4, ...
  std::vector<double> z_edges;          // lower edges of the z bins after the first (below 0)
  std::vector<std::vector<double>> cells;  // [z bin][size bin], fraction of the column's pairs
  std::vector<ExposurePoint> points;
  std::vector<int> group_sizes;
  std::vector<DistancePair> pairs;

  bool all_zero() const;
  std::size_t size_bin(int size) const;
  std::size_t z_bin(double z) const;
};

/// Pairs every unblocked interval with every trigger-space group.
/// `via_penalty` (nm per routing layer above the device) defaults to 0.
RouteDistanceHeatmap route_distance(const Layout& layout, const ExposureReport& exposure, const TriggerSpace& space,
                                    Nm via_penalty = 0);

struct TrojanDescriptor {
  std::string name;
  int std_cells = 1;
  int placement_sites = 1;
  bool timing_critical = false;
};

TrojanDescriptor a2_analog();
TrojanDescriptor a2_digital();

struct FeasibilityResult {
  bool feasible = false;
  std::optional<DistancePair> witness;
};

/// Feasible when some pair has a large enough group and, for timing-critical
/// Trojans, a distance within mean + 3 sigma.
FeasibilityResult feasibility(const RouteDistanceHeatmap& heatmap, const TrojanDescriptor& trojan);

std::string metrics_to_json(const TriggerSpace& space, const ExposureReport& exposure,
                            const RouteDistanceHeatmap& heatmap, const std::vector<TrojanDescriptor>& trojans);
std::string heatmap_to_csv(const RouteDistanceHeatmap& heatmap);
std::string trigger_histogram_to_csv(const TriggerSpace& space);

}  // namespace shieldroute
