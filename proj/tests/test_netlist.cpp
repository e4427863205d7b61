#include <gtest/gtest.h>

#include <functional>
#include <regex>
#include <sstream>

#include "shieldroute/error.hpp"
#include "shieldroute/netlist.hpp"
#include "test_support.hpp"

using namespace testsupport;

namespace {

Netlist load(const std::string& name) {
  const auto fmt = name.size() > 2 && name.substr(name.size() - 2) == ".v" ? NetlistFormat::Verilog
                                                                           : NetlistFormat::Native;
  return parse_netlist(slurp(data_path(name)), fmt);
}

// Plain recursion over drivers, no visited set.
void recurse(const Netlist& nl, NetId n, int depth, std::set<std::string>& out) {
  out.insert(nl.net(n).name);
  if (depth == 0 || !nl.net(n).driver) return;
  for (const auto& in : nl.cell(nl.net(n).driver->cell).inputs) recurse(nl, in.net, depth - 1, out);
}

std::set<std::string> oracle(const Netlist& nl, const std::set<std::string>& roots, int depth) {
  std::set<std::string> out;
  for (const auto& r : roots) recurse(nl, *nl.find_net(r), depth, out);
  return out;
}

const char* kChain =
    "input n2 n3 n4\n"
    "cell g1 OR2 A=n3 B=n4 : Y=n1\n"
    "cell g0 AND2 A=n1 B=n2 : Y=n0\n";

const std::vector<std::string> kFixtures = {"three_gate.net", "bench200.v", "tiny.net",
                                            "small.net",      "medium.net", "keys.net"};

}  // namespace

TEST(Netlist, ThreeGateFixture) {
  const auto nl = load("three_gate.net");
  EXPECT_EQ(nl.cells().size(), 3u);
  const auto y = nl.find_net("y");
  ASSERT_TRUE(y);
  EXPECT_TRUE(nl.net(*y).primary_output);
  EXPECT_EQ(nl.cell(nl.net(*y).driver->cell).cell_type, "INV");
}

TEST(Netlist, MultiplyDrivenNetRejected) {
  EXPECT_THROW(parse_netlist("input a\ncell g1 INV A=a : Y=b\ncell g2 BUF A=a : Y=b\n", NetlistFormat::Native),
               Error);
  EXPECT_THROW(parse_netlist("module m (a, y);\n input a;\n output y;\n not g1 (y, a);\n buf g2 (y, a);\nendmodule\n",
                             NetlistFormat::Verilog),
               Error);
}

TEST(Netlist, UndeclaredWireRejected) {
  EXPECT_THROW(parse_netlist("module m (a, y);\n input a;\n output y;\n not g (y, q);\nendmodule\n",
                             NetlistFormat::Verilog),
               Error);
}

TEST(Netlist, Bench200GateCountMatchesLineScan) {
  const std::string text = slurp(data_path("bench200.v"));
  const std::regex inst(R"(^\s*(and|or|nand|nor|xor|xnor|not|buf|[A-Z][A-Z0-9_]*)\s+\w+\s*\()");
  std::istringstream in(text);
  std::string line;
  std::size_t count = 0, prims = 0, assigns = 0;
  while (std::getline(in, line)) {
    std::smatch m;
    if (line.find("assign ") != std::string::npos) ++assigns;
    if (std::regex_search(line, m, inst)) {
      ++count;
      if (std::islower(static_cast<unsigned char>(m[1].str()[0]))) ++prims;
    }
  }
  EXPECT_EQ(prims, 200u);
  const auto nl = parse_netlist(text, NetlistFormat::Verilog);
  std::size_t gates = 0;
  for (const auto& c : nl.cells()) gates += c.cell_type != "assign";
  EXPECT_EQ(gates, count);
  EXPECT_EQ(nl.cells().size(), count + assigns);
}

TEST(Netlist, VerilogNamedAndPositionalPorts) {
  const auto nl = parse_netlist(
      "module top (a, b, y);\n"
      "  input a, b; output y; wire t;\n"
      "  nand g0 (t, a, b);\n"
      "  INV u1 (.A(t), .Y(y));\n"
      "endmodule\n",
      NetlistFormat::Verilog);
  EXPECT_EQ(nl.cells().size(), 2u);
  const auto y = nl.find_net("y");
  ASSERT_TRUE(y);
  ASSERT_TRUE(nl.net(*y).driver);
}

TEST(Netlist, FindRootsExamples) {
  auto nl = parse_netlist("input clk a\ncell g BUF A=a : Y=secure_supv\n", NetlistFormat::Native);
  EXPECT_EQ(find_roots(nl), (std::set<std::string>{"secure_supv"}));
  nl = parse_netlist("input a\ncell g BUF A=a : Y=b\n", NetlistFormat::Native);
  EXPECT_TRUE(find_roots(nl).empty());
  nl = parse_netlist("input a\ncell g0 BUF A=a : Y=secure_key_0\ncell g1 BUF A=a : Y=secure_key_1\n",
                     NetlistFormat::Native);
  EXPECT_EQ(find_roots(nl), (std::set<std::string>{"secure_key_0", "secure_key_1"}));
}

TEST(Netlist, FindRootsNeedsPrefixAtStart) {
  const auto nl = parse_netlist("input a\ncell g BUF A=a : Y=not_secure_x\n", NetlistFormat::Native);
  EXPECT_TRUE(find_roots(nl).empty());
}

TEST(Netlist, ExpandFaninExamples) {
  const auto nl = parse_netlist(kChain, NetlistFormat::Native);
  EXPECT_EQ(expand_fanin(nl, {"n0"}, 0).targets, (std::set<std::string>{"n0"}));
  EXPECT_EQ(expand_fanin(nl, {"n0"}, 1).targets, (std::set<std::string>{"n0", "n1", "n2"}));
  EXPECT_EQ(expand_fanin(nl, {"n0"}, 2).targets, (std::set<std::string>{"n0", "n1", "n2", "n3", "n4"}));
  EXPECT_THROW(expand_fanin(nl, {"nope"}, 1), LookupError);
}

TEST(Netlist, ExpandFaninMatchesRecursionOnFixtures) {
  for (const auto& f : kFixtures) {
    const auto nl = load(f);
    std::set<std::string> roots = find_roots(nl);
    if (roots.empty()) roots.insert(nl.nets().back().name);
    for (int d = 0; d <= 3; ++d) EXPECT_EQ(expand_fanin(nl, roots, d).targets, oracle(nl, roots, d)) << f << " d=" << d;
  }
}

TEST(Netlist, ExpandFaninMonotoneAndIdempotent) {
  for (const auto& f : kFixtures) {
    const auto nl = load(f);
    auto roots = find_roots(nl);
    if (roots.empty()) continue;
    std::set<std::string> prev;
    for (int d = 0; d <= 4; ++d) {
      const auto ts = expand_fanin(nl, roots, d);
      EXPECT_TRUE(std::includes(ts.targets.begin(), ts.targets.end(), prev.begin(), prev.end())) << f;
      EXPECT_TRUE(std::includes(ts.targets.begin(), ts.targets.end(), roots.begin(), roots.end()));
      EXPECT_EQ(expand_fanin(nl, ts.targets, 0).targets, ts.targets);
      prev = ts.targets;
    }
  }
}

TEST(Netlist, EveryNetHasOneDriver) {
  for (const auto& f : kFixtures) {
    const auto nl = load(f);
    std::map<NetId, int> drivers;
    for (CellId c = 0; c < nl.cells().size(); ++c)
      for (const auto& o : nl.cell(c).outputs) ++drivers[o.net];
    for (NetId n = 0; n < nl.nets().size(); ++n) {
      const auto& net = nl.net(n);
      EXPECT_EQ(drivers[n] + (net.primary_input ? 1 : 0), 1) << f << ' ' << net.name;
    }
  }
}

TEST(Netlist, NativeRoundTrip) {
  for (const auto& f : kFixtures) {
    const auto nl = load(f);
    const auto again = parse_netlist(write_native(nl), NetlistFormat::Native);
    EXPECT_EQ(write_native(again), write_native(nl)) << f;
    EXPECT_EQ(again.cells().size(), nl.cells().size());
    EXPECT_EQ(again.nets().size(), nl.nets().size());
  }
}

TEST(Netlist, KeysFixtureHas128Roots) {
  const auto nl = load("keys.net");
  EXPECT_EQ(find_roots(nl).size(), 128u);
}
