#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "shieldroute/exposure.hpp"
#include "shieldroute/layout.hpp"
#include "shieldroute/netlist.hpp"

namespace shieldroute {

enum class GuardArchitecture : std::uint8_t { FullyDisjoint, PartiallyConnected, FullyConnected };

std::string to_string(GuardArchitecture a);
/// Accepts fully_disjoint, partially_connected, fully_connected.
GuardArchitecture parse_architecture(std::string_view s);

/// Place along a traced path where the wire changes direction or layer.
struct PathFeature {
  enum class Kind : std::uint8_t { Bend, LayerChange };
  Kind kind = Kind::Bend;
  Nm position = 0;  // centerline distance from the start terminal
  Point at;
  int layer_from = 0, layer_to = 0;

  friend bool operator==(const PathFeature&, const PathFeature&) = default;
};

/// Centerline walk of a two-terminal wire.
struct TracedPath {
  Point start, end;
  int start_layer = 0, end_layer = 0;
  Nm length = 0;
  std::vector<PathFeature> features;
  std::vector<Nm> runs;  // straight same-layer stretches; features.size() + 1 entries

  friend bool operator==(const TracedPath&, const TracedPath&) = default;
};

/// Walks a net whose shapes form a simple open path (every junction at wire
/// endpoints or vias). Starts at the end nearest `prefer_start` when given.
/// Returns nothing when the geometry is not such a path.
std::optional<TracedPath> trace_path(const RoutedNet& net, std::optional<Point> prefer_start = std::nullopt);

/// Parallel adjacency between two nets: same-layer parallel wires whose
/// centerlines are at most one pitch apart, plus parallel wires on adjacent
/// layers whose edge gap is at most the first net's layer min spacing. Nm of
/// overlapping run.
Nm coupling_length(const TechRules& rules, const RoutedNet& guard, const RoutedNet& target);

struct GuardNetPlan {
  std::string name;
  std::array<Point, 2> terminals{};
  std::array<int, 2> terminal_layers{};
  TracedPath golden;
  std::map<std::string, Nm> designed_coupling;  // target net -> coupling length
  RoutedNet geometry;

  friend bool operator==(const GuardNetPlan&, const GuardNetPlan&) = default;
};

struct GuardPlan {
  GuardArchitecture architecture = GuardArchitecture::FullyConnected;
  std::set<std::string> targets;
  std::vector<GuardNetPlan> guards;

  const GuardNetPlan* find(std::string_view name) const;
  friend bool operator==(const GuardPlan&, const GuardPlan&) = default;
};

struct PlanOptions {
  GuardArchitecture architecture = GuardArchitecture::FullyConnected;
  /// Faces wrapped by one connected guard in the partially connected style.
  std::set<Face> partial_group{Face::LateralLow, Face::Top, Face::LateralHigh};
};

struct PlannedLayout {
  Layout layout;
  GuardPlan plan;
};

/// Places on-track guard wires over every unblocked interval of every target
/// segment, connects them per architecture, and records golden geometry.
/// Throws InfeasibleError when an interval cannot be covered or a required
/// connection cannot be routed.
PlannedLayout plan_guards(const Layout& layout, const ExposureReport& exposure, const PlanOptions& options = {});

struct CandidateConstraints {
  std::set<int> layers;  // empty: any layer
  Nm min_length = 0;
  bool require_timing_critical = false;
};

struct Candidate {
  std::string net;
  Nm blocked_weight = 0;  // target face weight this net blocks on its own
};

struct CandidateReport {
  std::vector<Candidate> ranked;  // by blocked_weight, descending; ties by name
  double baseline_blockage = 0;   // targets and device placements only
  double achievable_blockage = 0; // baseline plus every ranked candidate
};

/// Ranks existing non-target, non-guard nets as guard substitutes. Read-only.
CandidateReport select_existing_candidates(const Netlist& netlist, const Layout& layout,
                                           const std::set<std::string>& targets,
                                           const CandidateConstraints& constraints = {});

/// Text interchange for guard plans (micrometers).
std::string write_guard_plan(const GuardPlan& plan);
GuardPlan read_guard_plan(std::string_view text);

}  // namespace shieldroute
