#include "shieldroute/netlist.hpp"

#include <deque>
#include <sstream>

#include "shieldroute/error.hpp"
#include "text_scan.hpp"

namespace shieldroute {

std::optional<NetId> Netlist::find_net(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

NetId NetlistBuilder::net(std::string_view name) {
  auto it = nl_.by_name_.find(name);
  if (it != nl_.by_name_.end()) return it->second;
  const NetId id = nl_.nets_.size();
  nl_.nets_.push_back(Net{std::string(name), std::nullopt, {}, false, false, false});
  nl_.by_name_.emplace(std::string(name), id);
  return id;
}

bool NetlistBuilder::has_net(std::string_view name) const {
  return nl_.by_name_.find(name) != nl_.by_name_.end();
}

void NetlistBuilder::mark_input(NetId n) {
  auto& net = nl_.nets_.at(n);
  if (net.driver || net.primary_input) throw Error("multiply-driven net '" + net.name + "'");
  net.primary_input = true;
}

void NetlistBuilder::mark_output(NetId n) { nl_.nets_.at(n).primary_output = true; }

void NetlistBuilder::mark_timing_critical(NetId n) { nl_.nets_.at(n).timing_critical = true; }

CellId NetlistBuilder::add_cell(std::string name, std::string type,
                                const std::vector<PinBinding>& inputs,
                                const std::vector<PinBinding>& outputs) {
  if (!cell_names_.insert(name).second) throw Error("duplicate cell instance '" + name + "'");
  const CellId id = nl_.cells_.size();
  for (const auto& b : outputs) {
    auto& n = nl_.nets_.at(b.net);
    if (n.driver || n.primary_input) throw Error("multiply-driven net '" + n.name + "'");
    n.driver = PinRef{id, b.pin};
  }
  for (const auto& b : inputs) nl_.nets_.at(b.net).sinks.push_back(PinRef{id, b.pin});
  nl_.cells_.push_back(CellInstance{std::move(name), std::move(type), inputs, outputs});
  return id;
}

Netlist NetlistBuilder::finish() {
  for (const auto& n : nl_.nets_)
    if (!n.driver && !n.primary_input) throw Error("undriven net '" + n.name + "'");
  return std::move(nl_);
}

namespace {

Netlist parse_native(std::string_view text) {
  NetlistBuilder b;
  detail::LineScanner scan(text);
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      scan.fail(e.what());
    }
  };
  while (scan.next_line()) {
    const auto& toks = scan.tokens();
    const std::string_view kw = toks[0].text;
    if (kw == "input" || kw == "output") {
      if (toks.size() < 2) scan.fail("expected at least one net name");
      for (std::size_t i = 1; i < toks.size(); ++i) {
        guarded([&] {
          const NetId n = b.net(toks[i].text);
          if (kw == "input") b.mark_input(n);
          else b.mark_output(n);
        });
      }
    } else if (kw == "net") {
      if (toks.size() < 2) scan.fail("expected: net <name> [timing_critical]");
      const NetId n = b.net(toks[1].text);
      for (std::size_t i = 2; i < toks.size(); ++i) {
        if (toks[i].text == "timing_critical") b.mark_timing_critical(n);
        else scan.fail("unknown net attribute '" + std::string(toks[i].text) + "'", i);
      }
    } else if (kw == "cell") {
      if (toks.size() < 4) scan.fail("expected: cell <inst> <type> <pin>=<net>... : <pin>=<net>...");
      std::vector<PinBinding> ins, outs;
      bool in_outputs = false;
      for (std::size_t i = 3; i < toks.size(); ++i) {
        const std::string_view t = toks[i].text;
        if (t == ":") {
          if (in_outputs) scan.fail("second ':' in cell record", i);
          in_outputs = true;
          continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos || eq == 0 || eq + 1 == t.size())
          scan.fail("expected <pin>=<net>", i);
        PinBinding pb{std::string(t.substr(0, eq)), b.net(t.substr(eq + 1))};
        (in_outputs ? outs : ins).push_back(std::move(pb));
      }
      if (!in_outputs) scan.fail("cell record lacks ':' before its outputs");
      if (outs.empty()) scan.fail("cell record drives no output");
      guarded([&] { b.add_cell(std::string(toks[1].text), std::string(toks[2].text), ins, outs); });
    } else {
      scan.fail("unknown record '" + std::string(kw) + "'");
    }
  }
  return b.finish();
}

}  // namespace

Netlist parse_verilog(std::string_view text);  // verilog.cpp

Netlist parse_netlist(std::string_view text, NetlistFormat format) {
  return format == NetlistFormat::Native ? parse_native(text) : parse_verilog(text);
}

std::string write_native(const Netlist& nl) {
  std::ostringstream out;
  std::vector<std::string> ins, outs;
  for (const auto& n : nl.nets()) {
    if (n.primary_input) out << "input " << n.name << '\n';
  }
  for (const auto& n : nl.nets()) {
    if (n.primary_output) out << "output " << n.name << '\n';
  }
  for (const auto& n : nl.nets()) {
    if (n.timing_critical) out << "net " << n.name << " timing_critical\n";
  }
  for (const auto& c : nl.cells()) {
    out << "cell " << c.name << ' ' << c.cell_type;
    for (const auto& b : c.inputs) out << ' ' << b.pin << '=' << nl.net(b.net).name;
    out << " :";
    for (const auto& b : c.outputs) out << ' ' << b.pin << '=' << nl.net(b.net).name;
    out << '\n';
  }
  return out.str();
}

std::set<std::string> find_roots(const Netlist& nl) {
  std::set<std::string> roots;
  for (const auto& n : nl.nets())
    if (n.name.rfind("secure_", 0) == 0) roots.insert(n.name);
  return roots;
}

TargetSet expand_fanin(const Netlist& nl, const std::set<std::string>& roots, int depth) {
  if (depth < 0) throw Error("fan-in depth must be >= 0");
  TargetSet ts;
  ts.roots = roots;
  ts.depth = depth;
  std::vector<int> level(nl.nets().size(), -1);
  std::deque<NetId> frontier;
  for (const auto& r : roots) {
    const auto id = nl.find_net(r);
    if (!id) throw LookupError("unknown root net '" + r + "'");
    if (level[*id] < 0) {
      level[*id] = 0;
      frontier.push_back(*id);
    }
  }
  while (!frontier.empty()) {
    const NetId n = frontier.front();
    frontier.pop_front();
    if (level[n] >= depth) continue;
    const auto& drv = nl.net(n).driver;
    if (!drv) continue;
    for (const auto& in : nl.cell(drv->cell).inputs) {
      if (level[in.net] < 0) {
        level[in.net] = level[n] + 1;
        frontier.push_back(in.net);
      }
    }
  }
  for (NetId i = 0; i < level.size(); ++i)
    if (level[i] >= 0) ts.targets.insert(nl.net(i).name);
  return ts;
}

}  // namespace shieldroute
