#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace shieldroute {

using NetId = std::size_t;
using CellId = std::size_t;

struct PinRef {
  CellId cell = 0;
  std::string pin;

  friend bool operator==(const PinRef&, const PinRef&) = default;
};

struct PinBinding {
  std::string pin;
  NetId net = 0;

  friend bool operator==(const PinBinding&, const PinBinding&) = default;
};

struct CellInstance {
  std::string name;
  std::string cell_type;
  std::vector<PinBinding> inputs;
  std::vector<PinBinding> outputs;

  friend bool operator==(const CellInstance&, const CellInstance&) = default;
};

struct Net {
  std::string name;
  std::optional<PinRef> driver;  // empty: driven by a primary input
  std::vector<PinRef> sinks;
  bool primary_input = false;
  bool primary_output = false;
  bool timing_critical = false;

  friend bool operator==(const Net&, const Net&) = default;
};

/// Gate-level connectivity graph: every net has exactly one driver (a cell
/// output or a primary input). Immutable after parsing.
class Netlist {
 public:
  const std::vector<CellInstance>& cells() const { return cells_; }
  const std::vector<Net>& nets() const { return nets_; }

  std::optional<NetId> find_net(std::string_view name) const;
  const Net& net(NetId id) const { return nets_.at(id); }
  const CellInstance& cell(CellId id) const { return cells_.at(id); }

  friend bool operator==(const Netlist&, const Netlist&) = default;

 private:
  friend class NetlistBuilder;
  std::vector<CellInstance> cells_;
  std::vector<Net> nets_;
  std::map<std::string, NetId, std::less<>> by_name_;
};

/// Incremental construction with connectivity checks. Used by both parsers.
class NetlistBuilder {
 public:
  NetId net(std::string_view name);
  bool has_net(std::string_view name) const;
  void mark_input(NetId n);
  void mark_output(NetId n);
  void mark_timing_critical(NetId n);
  /// Throws Error("multiply-driven net ...") when an output pin lands on a driven net.
  CellId add_cell(std::string name, std::string type, const std::vector<PinBinding>& inputs,
                  const std::vector<PinBinding>& outputs);
  /// Verifies every net has a driver; throws Error naming the first undriven net.
  Netlist finish();

 private:
  Netlist nl_;
  std::set<std::string, std::less<>> cell_names_;
};

enum class NetlistFormat { Native, Verilog };

/// Parses a netlist. Native format:
///   input <net>...      primary inputs
///   output <net>...     primary outputs
///   net <name> [timing_critical]
///   cell <inst> <type> <pin>=<net>... : <pin>=<net>...   (inputs, then outputs)
/// Verilog: structural subset (module/input/output/wire, gate primitives, cell
/// instances with positional or named ports, one level of module instantiation).
Netlist parse_netlist(std::string_view text, NetlistFormat format);

std::string write_native(const Netlist& nl);

/// Nets whose name starts with the `secure_` root prefix.
std::set<std::string> find_roots(const Netlist& nl);

struct TargetSet {
  std::set<std::string> roots;
  int depth = 0;
  std::set<std::string> targets;  // roots plus their fan-in up to `depth` gate levels
};

/// Breadth-first fan-in expansion. Throws LookupError for an unknown root.
TargetSet expand_fanin(const Netlist& nl, const std::set<std::string>& roots, int depth);

}  // namespace shieldroute
