// Regenerates the bundled fixtures under data/ from a fixed seed.
//   make_fixtures <data_dir> [--seed N]

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shieldroute/error.hpp"
#include "shieldroute/gds.hpp"
#include "shieldroute/layout.hpp"
#include "shieldroute/netlist.hpp"
#include "shieldroute/tamper.hpp"
#include "shieldroute/tech.hpp"

namespace fs = std::filesystem;
using namespace shieldroute;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  int range(int lo, int hi) { return lo + static_cast<int>(g_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool chance(double p) { return static_cast<double>(g_() >> 11) * 0x1.0p-53 < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[g_() % v.size()]; }

 private:
  SplitMix64 g_;
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string pad(int v, int w) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(w) ? w - s.size() : 0, '0') + s;
}

// ---------------------------------------------------------------------------
// Netlists

struct GateSpec {
  std::string type;
  int inputs;
};

const std::vector<GateSpec> kGates = {{"AND2", 2}, {"OR2", 2}, {"NAND2", 2}, {"NOR2", 2},
                                      {"XOR2", 2}, {"INV", 1}, {"BUF", 1}};

struct NetlistPlan {
  int inputs = 8;
  int cells = 40;
  std::vector<std::string> roots;  // names given to the last cell outputs
  int keys = 0;                    // key registers fed by a shared load net
};

std::string random_netlist(const NetlistPlan& plan, Rng& rng) {
  std::ostringstream out;
  std::vector<std::string> nets;
  out << "input";
  for (int i = 0; i < plan.inputs; ++i) {
    nets.push_back("pi_" + std::to_string(i));
    out << ' ' << nets.back();
  }
  if (plan.keys > 0) out << " clk key_in";
  out << '\n';
  std::vector<std::string> body;
  std::set<std::string> consumed;
  const int first_root = plan.cells - static_cast<int>(plan.roots.size());
  for (int i = 0; i < plan.cells; ++i) {
    const GateSpec& g = rng.pick(kGates);
    std::ostringstream line;
    const std::string out_net = i >= first_root ? plan.roots[i - first_root] : "n_" + std::to_string(i);
    line << "cell u_" << pad(i, 4) << ' ' << g.type;
    const char* pins[2] = {"A", "B"};
    std::set<std::string> used;
    for (int k = 0; k < g.inputs; ++k) {
      std::string in;
      do {
        const int span = std::min<int>(24, static_cast<int>(nets.size()));
        in = rng.chance(0.75) ? nets[nets.size() - 1 - rng.range(0, span - 1)] : rng.pick(nets);
      } while (used.count(in) && used.size() < nets.size());
      used.insert(in);
      consumed.insert(in);
      line << ' ' << pins[k] << '=' << in;
    }
    line << " : Y=" << out_net;
    body.push_back(line.str());
    if (i < first_root) nets.push_back(out_net);
  }
  if (plan.keys > 0) {
    body.push_back("cell u_kbuf BUF A=key_in : Y=key_d");
    for (int k = 0; k < plan.keys; ++k)
      body.push_back("cell u_key_" + pad(k, 3) + " DFF D=key_d CK=clk : Q=secure_key_" + pad(k, 3));
  }
  std::vector<std::string> outputs;
  for (const auto& n : nets)
    if (n.rfind("n_", 0) == 0 && !consumed.count(n)) outputs.push_back(n);
  for (const auto& r : plan.roots) outputs.push_back(r);
  for (int k = 0; k < plan.keys; ++k) outputs.push_back("secure_key_" + pad(k, 3));
  out << "output";
  for (const auto& o : outputs) out << ' ' << o;
  out << '\n';
  for (int i = 0; i < plan.cells; i += 9)
    if (i < first_root) out << "net n_" << i << " timing_critical\n";
  for (const auto& b : body) out << b << '\n';
  return out.str();
}

std::string three_gate() {
  return "# AND feeding OR, then an inverter\n"
         "input a b c\n"
         "output y\n"
         "cell g_and AND2 A=a B=b : Y=n1\n"
         "cell g_or OR2 A=n1 B=c : Y=n2\n"
         "cell g_inv INV A=n2 : Y=y\n";
}

std::string bench200(Rng& rng) {
  const std::vector<std::string> prims = {"and", "or", "nand", "nor", "xor", "xnor", "not", "buf"};
  std::ostringstream out;
  out << "// 200 gate primitives, four registers, one secure output\n";
  out << "module bench200 (pi, clk, q, secure_supv);\n";
  out << "  input [15:0] pi;\n  input clk;\n  output [3:0] q;\n  output secure_supv;\n";
  std::vector<std::string> avail;
  for (int i = 0; i < 16; ++i) avail.push_back("pi[" + std::to_string(i) + "]");
  out << "  wire";
  for (int i = 0; i < 199; ++i) out << (i ? ", " : " ") << "w" << i;
  out << ";\n  wire supv_raw;\n";
  for (int i = 0; i < 200; ++i) {
    const std::string& p = rng.pick(prims);
    const int nin = (p == "not" || p == "buf") ? 1 : rng.range(2, 3);
    const std::string o = i < 199 ? "w" + std::to_string(i) : "supv_raw";
    out << "  " << p << " g" << i << " (" << o;
    std::set<std::string> used;
    for (int k = 0; k < nin; ++k) {
      std::string in;
      do {
        const int span = std::min<int>(20, static_cast<int>(avail.size()));
        in = avail[avail.size() - 1 - rng.range(0, span - 1)];
      } while (used.count(in));
      used.insert(in);
      out << ", " << in;
    }
    out << ");\n";
    avail.push_back(o);
  }
  for (int r = 0; r < 4; ++r)
    out << "  DFF r" << r << " (.D(w" << (40 * r + 7) << "), .CK(clk), .Q(q[" << r << "]));\n";
  out << "  assign secure_supv = supv_raw;\n";
  out << "endmodule\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Layouts

struct LayoutPlan {
  int targets_keys = 0;          // parallel key block size (0: none)
  Nm target_len_lo = 4000, target_len_hi = 14000;
  Nm target_gap = 4000;          // Chebyshev clearance between independent targets
  Nm keepout = 2000;             // foreign wires stay this far from targets on layers 2-4
  int reserved_rows = 12, reserved_cols = 150;
};

class LayoutBuilder {
 public:
  LayoutBuilder(std::shared_ptr<const TechRules> rules, Rng& rng)
      : rules_(*rules), rng_(rng), layout_(rules), shapes_(*rules), keepout_(*rules) {
    die_ = rules_.die_rect();
  }

  Layout& layout() { return layout_; }

  bool clear_of_others(const std::string& net, int layer, const Rect& r) const {
    const Nm s = rules_.layer(layer).min_spacing;
    for (std::size_t id : shapes_.query(layer, r.expanded(s))) {
      const Shape& sh = shapes_.shape(id);
      if (sh.net != net && distance_sq(r, sh.rect) < s * s) return false;
    }
    return true;
  }

  bool inside(const Rect& r, Nm margin) const {
    return r.xlo >= die_.xlo + margin && r.ylo >= die_.ylo + margin && r.xhi <= die_.xhi - margin &&
           r.yhi <= die_.yhi - margin;
  }

  void commit(const std::string& net, const std::vector<WireSegment>& segs, const std::vector<Via>& vias,
              bool locked) {
    auto& n = layout_.nets()[net];
    n.locked = locked;
    for (const auto& s : segs) {
      shapes_.insert(Shape{net, s.layer, s.rect(), ShapeKind::Segment, n.segments.size()});
      n.segments.push_back(s);
    }
    for (const auto& v : vias) {
      for (int l : {v.lower_layer, v.lower_layer + 1})
        shapes_.insert(Shape{net, l, via_pad(rules_, v, l), ShapeKind::ViaPad, n.vias.size()});
      n.vias.push_back(v);
    }
  }

  void add_keepout(const WireSegment& s, Nm d) {
    for (int l = std::max(1, s.layer - 1); l <= std::min(rules_.layer_count(), s.layer + 1); ++l)
      keepout_.insert(Shape{"", l, s.rect().expanded(d), ShapeKind::Segment, 0});
    target_rects_.push_back(s.rect());
  }

  bool in_keepout(int layer, const Rect& r) const {
    for (std::size_t id : keepout_.query(layer, r))
      if (overlaps(keepout_.shape(id).rect, r)) return true;
    return false;
  }

  // Straight horizontal wire on layer 3, clear of every earlier target by `gap`.
  bool place_target(const std::string& net, const LayoutPlan& plan, Nm keep) {
    const int layer = 3;
    const Nm pitch = rules_.layer(layer).mmp, w = rules_.layer(layer).default_width;
    for (int attempt = 0; attempt < 4000; ++attempt) {
      const Nm len = pitch * rng_.range(static_cast<int>(plan.target_len_lo / pitch),
                                        static_cast<int>(plan.target_len_hi / pitch));
      const Nm x0 = pitch * rng_.range(static_cast<int>(5000 / pitch), static_cast<int>((die_.xhi - 5000 - len) / pitch));
      const Nm y = pitch * rng_.range(static_cast<int>(5000 / pitch), static_cast<int>((die_.yhi - 5000) / pitch));
      WireSegment s{net, layer, {x0, y}, {x0 + len, y}, w};
      const Rect r = s.rect();
      bool ok = true;
      for (const auto& t : target_rects_) {
        const Rect grown = t.expanded(plan.target_gap);
        if (overlaps(grown, r)) ok = false;
      }
      if (!ok) continue;
      commit(net, {s}, {}, true);
      add_keepout(s, keep);
      return true;
    }
    return false;
  }

  void place_key_block(const std::vector<std::string>& keys, Nm x0, Nm y0, Nm len, Nm keep) {
    const int layer = 3;
    const Nm pitch = rules_.layer(layer).mmp, w = rules_.layer(layer).default_width;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const Nm y = y0 + static_cast<Nm>(k) * 2 * pitch;
      WireSegment s{keys[k], layer, {x0, y}, {x0 + len, y}, w};
      commit(keys[k], {s}, {}, true);
      add_keepout(s, keep);
    }
  }

  // Random L-shaped two-layer wire: horizontal on `h`, vertical on `h + 1`.
  bool route_foreign(const std::string& net) {
    static const int pairs[3] = {1, 3, 5};
    for (int attempt = 0; attempt < 300; ++attempt) {
      const int h = pairs[rng_.range(0, 2)], v = h + 1;
      const Nm ph = rules_.layer(h).mmp, pv = rules_.layer(v).mmp;
      const Nm wh = rules_.layer(h).default_width, wv = rules_.layer(v).default_width;
      const Nm hx = pv * rng_.range(1, static_cast<int>(24000 / pv));
      const Nm vy = ph * rng_.range(0, static_cast<int>(16000 / ph));
      const Nm x0 = pv * rng_.range(2, static_cast<int>((die_.xhi - hx) / pv) - 2);
      const Nm y = ph * rng_.range(4, static_cast<int>(die_.yhi / ph) - 4);
      const bool right = rng_.chance(0.5), up = rng_.chance(0.5);
      const Nm xc = right ? x0 + hx : x0;
      const Nm xs = right ? x0 : x0 + hx;
      std::vector<WireSegment> segs{{net, h, {xs, y}, {xc, y}, wh}};
      std::vector<Via> vias;
      if (vy > 0) {
        const Nm y1 = up ? y + vy : y - vy;
        segs.push_back({net, v, {xc, y}, {xc, y1}, wv});
        vias.push_back({net, h, {xc, y}});
      }
      bool ok = true;
      for (const auto& s : segs) {
        const Rect r = s.rect();
        ok = ok && inside(r, 500) && clear_of_others(net, s.layer, r) && !in_keepout(s.layer, r);
      }
      for (const auto& vv : vias)
        for (int l : {vv.lower_layer, vv.lower_layer + 1}) {
          const Rect r = via_pad(rules_, vv, l);
          ok = ok && inside(r, 500) && clear_of_others(net, l, r) && !in_keepout(l, r);
        }
      if (!ok) continue;
      commit(net, segs, vias, false);
      return true;
    }
    return false;
  }

  void place_cells(const std::vector<std::string>& names, const LayoutPlan& plan) {
    std::size_t next = 0;
    int pads = 0, fills = 0;
    for (int row = 0; row < rules_.device_rows; ++row) {
      int col = 0;
      while (col < rules_.device_cols) {
        if (row < plan.reserved_rows && col < plan.reserved_cols) {
          col = plan.reserved_cols;
          continue;
        }
        if (rng_.chance(0.18)) col += rng_.range(1, 3);
        if (col >= rules_.device_cols) break;
        Placement p;
        p.row = row;
        p.col = col;
        if (rng_.chance(0.05)) {
          p.cols = rng_.range(1, 3);
          p.fill = true;
          p.name = "fill_" + pad(fills++, 5);
        } else {
          p.cols = rng_.range(2, 8);
          p.name = next < names.size() ? names[next++] : "pad_" + pad(pads++, 5);
        }
        p.cols = std::min(p.cols, rules_.device_cols - col);
        col += p.cols;
        layout_.placements().emplace(p.name, p);
      }
    }
  }

 private:
  const TechRules& rules_;
  Rng& rng_;
  Layout layout_;
  ShapeIndex shapes_;
  ShapeIndex keepout_;
  std::vector<Rect> target_rects_;
  Rect die_{};
};

struct Fixture {
  std::string netlist_text;
  std::string layout_text;
  std::size_t routed = 0, skipped = 0, targets = 0;
};

Fixture make_fixture(std::shared_ptr<const TechRules> rules, const NetlistPlan& np, const LayoutPlan& lp, Rng& rng) {
  Fixture fx;
  fx.netlist_text = random_netlist(np, rng);
  const Netlist nl = parse_netlist(fx.netlist_text, NetlistFormat::Native);
  const auto ts = expand_fanin(nl, find_roots(nl), 2);
  LayoutBuilder b(rules, rng);

  std::vector<std::string> keys, loose;
  for (const auto& t : ts.targets) (t.rfind("secure_key_", 0) == 0 ? keys : loose).push_back(t);
  if (!keys.empty()) {
    const Nm pitch = rules->layer(3).mmp;
    b.place_key_block(keys, 12000, 28000, 60000, lp.keepout);
    (void)pitch;
  }
  for (const auto& t : loose)
    if (!b.place_target(t, lp, lp.keepout)) throw Error("no room for target " + t);
  fx.targets = ts.targets.size();

  std::vector<std::string> cells;
  for (const auto& c : nl.cells()) cells.push_back(c.name);
  b.place_cells(cells, lp);

  for (const auto& n : nl.nets()) {
    if (ts.targets.count(n.name)) continue;
    if (b.route_foreign(n.name)) ++fx.routed;
    else ++fx.skipped;
  }
  validate_layout(b.layout());
  if (!drc_check(b.layout()).empty()) throw Error("generated layout is not DRC clean");
  fx.layout_text = write_layout(b.layout());
  return fx;
}

// ---------------------------------------------------------------------------
// Malformed inputs

void malformed_text(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& cases) {
  for (const auto& [name, body] : cases) write_text(dir / name, body);
}

void malformed_corpus(const fs::path& data, const std::vector<std::uint8_t>& good_gds) {
  const fs::path m = data / "malformed";
  const std::string tech_head = "layer 1 M1 0.07 0.14 horizontal\nlayer 2 M2 0.07 0.14 vertical\n";
  malformed_text(m / "tech", {
      {"01_empty.tech", ""},
      {"02_unknown_keyword.tech", tech_head + "metal 3 M3 0.07 0.14 horizontal\n"},
      {"03_bad_number.tech", "layer 1 M1 0.0x7 0.14 horizontal\n"},
      {"04_negative_spacing.tech", "layer 1 M1 -0.07 0.14 horizontal\n"},
      {"05_pitch_not_above_spacing.tech", "layer 1 M1 0.14 0.14 horizontal\n"},
      {"06_bad_direction.tech", "layer 1 M1 0.07 0.14 diagonal\n"},
      {"07_layer_gap.tech", "layer 1 M1 0.07 0.14 horizontal\nlayer 3 M3 0.07 0.14 horizontal\n"},
      {"08_duplicate_layer.tech", tech_head + "layer 2 M2b 0.07 0.14 vertical\n"},
      {"09_too_many_decimals.tech", "layer 1 M1 0.0701 0.14 horizontal\n"},
      {"10_missing_field.tech", "layer 1 M1 0.07 horizontal\n"},
      {"11_bad_site.tech", tech_head + "site 0.14 1.40 sixty 600\n"},
      {"12_bad_dielectric.tech", tech_head + "dielectric 0.5\n"},
  });
  malformed_text(m / "netlist", {
      {"01_pin_without_net.net", "input a\ncell g INV A= : Y=b\n"},
      {"02_unknown_record.net", "input a\nwire b\n"},
      {"03_missing_colon.net", "input a\ncell g INV A=a Y=b\n"},
      {"04_bad_binding.net", "input a\ncell g INV A a : Y=b\n"},
      {"05_multiply_driven.net", "input a\ncell g1 INV A=a : Y=b\ncell g2 BUF A=a : Y=b\n"},
      {"06_undriven.net", "input a\ncell g AND2 A=a B=c : Y=b\n"},
      {"07_driven_input.net", "input a b\ncell g INV A=a : Y=b\n"},
      {"08_duplicate_cell.net", "input a\ncell g INV A=a : Y=b\ncell g INV A=b : Y=c\n"},
      {"09_bad_flag.net", "input a\nnet a slow\n"},
      {"10_no_outputs_after_colon.net", "input a\ncell g INV A=a :\n"},
      {"11_bare_cell.net", "cell\n"},
  });
  malformed_text(m / "verilog", {
      {"01_empty.v", ""},
      {"02_no_module.v", "wire a;\n"},
      {"03_missing_endmodule.v", "module m (a, y);\n input a;\n output y;\n not g (y, a);\n"},
      {"04_unterminated_comment.v", "module m (a); /* open\n input a;\nendmodule\n"},
      {"05_bad_character.v", "module m (a);\n input a @;\nendmodule\n"},
      {"06_missing_semicolon.v", "module m (a, y)\n input a;\n output y;\n not g (y, a);\nendmodule\n"},
      {"07_undeclared_net.v", "module m (a, y);\n input a;\n output y;\n not g (y, zz);\nendmodule\n"},
      {"08_multiply_driven.v", "module m (a, y);\n input a;\n output y;\n not g1 (y, a);\n buf g2 (y, a);\nendmodule\n"},
      {"09_bad_range.v", "module m (a);\n input [3:x] a;\nendmodule\n"},
      {"10_missing_port_comma.v", "module m (a, y);\n input a;\n output y;\n INV u (.A(a) .Y(y));\nendmodule\n"},
      {"11_primitive_no_output.v", "module m (a);\n input a;\n and g ();\nendmodule\n"},
  });
  const std::string lay_head = "layout 1\ntech layers=10 grid=60x600\n";
  malformed_text(m / "layout", {
      {"01_empty.layout", ""},
      {"02_bad_header.layout", "layout 2\n"},
      {"03_wrong_layer_count.layout", "layout 1\ntech layers=6 grid=60x600\n"},
      {"04_segment_before_net.layout", lay_head + "segment a 1 0 0.07 1 0.07 0.07\n"},
      {"05_diagonal_segment.layout", lay_head + "net a\nsegment a 1 0 0 1 1 0.07\n"},
      {"06_zero_length.layout", lay_head + "net a\nsegment a 1 1 0.14 1 0.14 0.07\n"},
      {"07_unknown_layer.layout", lay_head + "net a\nsegment a 12 0 0.14 1 0.14 0.07\n"},
      {"08_bad_number.layout", lay_head + "net a\nsegment a 1 0 0.14 1.0.0 0.14 0.07\n"},
      {"09_duplicate_net.layout", lay_head + "net a\nnet a\n"},
      {"10_via_off_wire.layout", lay_head + "net a\nsegment a 1 1 0.14 2 0.14 0.07\nvia a 1 5 5\n"},
      {"11_placement_outside.layout", lay_head + "placement c 59 598 1 5\n"},
      {"12_unknown_flag.layout", lay_head + "net a secret\n"},
      {"13_short_placement.layout", lay_head + "placement c 1 2\n"},
  });
  const std::string gp_head = "guardplan 1\narchitecture fully_connected\ntarget t\n";
  malformed_text(m / "guardplan", {
      {"01_empty.guardplan", ""},
      {"02_bad_header.guardplan", "guard 1\n"},
      {"03_bad_architecture.guardplan", "guardplan 1\narchitecture ring\n"},
      {"04_undeclared_guard.guardplan", gp_head + "segment g 2 0 0 1 0 0.07\n"},
      {"05_missing_golden.guardplan",
       gp_head + "guard g 2 0 0 2 1 0\nsegment g 2 0 0 1 0 0.07\n"},
      {"06_golden_mismatch.guardplan",
       gp_head + "guard g 2 0 0 2 1 0\nsegment g 2 0 0 1 0 0.07\ngolden g 2 0\n"},
      {"07_bad_feature_kind.guardplan",
       gp_head + "guard g 2 0 0 2 1 0\nfeature g twist 0 0 0 2 2\n"},
      {"08_short_guard.guardplan", gp_head + "guard g 2 0 0\n"},
      {"09_diagonal_segment.guardplan", gp_head + "guard g 2 0 0 2 1 1\nsegment g 2 0 0 1 1 0.07\n"},
      {"10_not_a_path.guardplan",
       gp_head +
           "guard g 2 0 0 2 1 0\nsegment g 2 0 0 1 0 0.07\nsegment g 2 0.5 -1 0.5 1 0.07\ngolden g 1 0\n"},
      {"11_unknown_record.guardplan", gp_head + "shield g\n"},
      {"12_bad_length.guardplan", gp_head + "guard g 2 0 0 2 one 0\n"},
  });
  malformed_text(m / "layermap", {
      {"01_unknown_name.map", "1 0 M11\n"},
      {"02_missing_field.map", "1 0\n"},
      {"03_bad_number.map", "x 0 M1\n"},
      {"04_negative_layer.map", "-1 0 M1\n"},
      {"05_duplicate_pair.map", "1 0 M1\n1 0 M2\n"},
      {"06_duplicate_target.map", "1 0 M1\n2 0 M1\n"},
      {"07_layer_too_large.map", "70000 0 M1\n"},
      {"08_bad_via.map", "101 0 VIA10\n"},
      {"09_via_zero.map", "100 0 VIA0\n"},
      {"10_extra_field.map", "1 0 M1 extra\n"},
      {"11_datatype_too_large.map", "1 70000 M1\n"},
  });

  // Binary corruptions of a valid stream.
  const fs::path g = m / "gds";
  auto mutate = [&](const std::string& name, auto fn) {
    std::vector<std::uint8_t> b = good_gds;
    fn(b);
    write_bytes(g / name, b);
  };
  const auto recs = split_records(good_gds);
  auto find_rec = [&](std::uint8_t type) -> const GdsRecord& {
    for (const auto& r : recs)
      if (r.record_type == type) return r;
    throw Error("record missing from generated stream");
  };
  write_bytes(g / "01_empty.gds", {});
  mutate("02_truncated_header.gds", [](auto& b) { b.resize(3); });
  mutate("03_truncated_payload.gds", [](auto& b) { b.resize(b.size() - 7); });
  mutate("04_odd_length.gds", [](auto& b) { b[1] = 7; });
  mutate("05_length_below_header.gds", [](auto& b) { b[0] = 0; b[1] = 2; });
  mutate("06_unknown_record.gds", [&](auto& b) { b[find_rec(gds::BGNSTR).offset + 2] = 0x7E; });
  mutate("07_missing_endlib.gds", [](auto& b) { b.resize(b.size() - 4); });
  mutate("08_xy_odd_coordinates.gds", [&](auto& b) {
    const auto& r = find_rec(gds::XY);
    // Shrink the XY record by 4 bytes and drop them from the stream.
    const std::size_t at = r.offset;
    const std::uint16_t len = static_cast<std::uint16_t>(r.length - 4);
    b[at] = static_cast<std::uint8_t>(len >> 8);
    b[at + 1] = static_cast<std::uint8_t>(len & 0xFF);
    b.erase(b.begin() + static_cast<long>(at + len), b.begin() + static_cast<long>(at + len + 4));
  });
  mutate("09_unmapped_layer.gds", [&](auto& b) {
    const auto& r = find_rec(gds::LAYER);
    b[r.offset + 4] = 0x00;
    b[r.offset + 5] = 0x3F;
  });
  mutate("10_wrong_datatype_code.gds", [&](auto& b) { b[find_rec(gds::LAYER).offset + 3] = gds::ASCII; });
  mutate("11_garbage_tail.gds", [](auto& b) {
    for (std::uint8_t x : {0xDE, 0xAD, 0xBE, 0xEF, 0x00, 0x05}) b.push_back(x);
  });
  mutate("12_no_header.gds", [&](auto& b) {
    const auto& r = find_rec(gds::HEADER);
    b.erase(b.begin() + static_cast<long>(r.offset), b.begin() + static_cast<long>(r.offset + r.length));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerates bundled fixtures"};
  std::string dir = "data";
  std::uint64_t seed = 20240611;
  app.add_option("dir", dir, "Output data directory");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path data(dir);
    auto rules = std::make_shared<const TechRules>(parse_tech([&] {
      std::ifstream in(data / "ibm45soi.tech");
      if (!in) throw Error("missing " + (data / "ibm45soi.tech").string());
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }()));
    Rng rng(seed);

    write_text(data / "three_gate.net", three_gate());
    write_text(data / "bench200.v", bench200(rng));
    write_text(data / "default.layermap", serialize_layer_map(default_layer_map(*rules), *rules));

    struct Job {
      std::string name;
      NetlistPlan np;
      LayoutPlan lp;
    };
    std::vector<Job> jobs = {
        {"tiny", {6, 44, {"secure_tiny"}, 0}, {}},
        {"small", {12, 150, {"secure_mode", "secure_otp"}, 0}, {}},
        {"medium", {24, 600, {"secure_supv", "secure_csr", "secure_dbg"}, 0}, {}},
        {"keys", {10, 110, {}, 128}, {}},
    };
    std::vector<std::uint8_t> tiny_gds;
    for (const auto& j : jobs) {
      const Fixture fx = make_fixture(rules, j.np, j.lp, rng);
      write_text(data / (j.name + ".net"), fx.netlist_text);
      write_text(data / (j.name + ".layout"), fx.layout_text);
      const Layout lay = read_layout(fx.layout_text, rules);
      const auto bytes = write_gds(lay, default_layer_map(*rules));
      write_bytes(data / (j.name + ".gds"), bytes);
      if (j.name == "tiny") tiny_gds = bytes;
      std::cout << j.name << ": " << lay.nets().size() << " routed nets, " << fx.targets << " targets, "
                << fx.skipped << " unrouted, " << lay.placements().size() << " placements\n";
    }
    malformed_corpus(data, tiny_gds);
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
