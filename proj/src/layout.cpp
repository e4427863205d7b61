#include "shieldroute/layout.hpp"

#include <cmath>
#include <sstream>

#include "shieldroute/error.hpp"
#include "text_scan.hpp"

namespace shieldroute {

Rect WireSegment::rect() const {
  const Axis ax = axis();
  const Nm c = across();
  const Nm half = width / 2;
  return make_rect(ax, lo(), hi(), c - half, c - half + width);
}

Rect via_pad(const TechRules& rules, const Via& v, int layer) {
  const Nm w = rules.layer(layer).default_width;
  const Nm half = w / 2;
  return {v.at.x - half, v.at.y - half, v.at.x - half + w, v.at.y - half + w};
}

const RoutedNet* Layout::find_net(std::string_view name) const {
  auto it = nets_.find(std::string(name));
  return it == nets_.end() ? nullptr : &it->second;
}

namespace {

void append_net_shapes(const TechRules& rules, const std::string& name, const RoutedNet& n,
                       std::vector<Shape>& out) {
  for (std::size_t i = 0; i < n.segments.size(); ++i) {
    const auto& s = n.segments[i];
    out.push_back(Shape{name, s.layer, s.rect(), ShapeKind::Segment, i});
  }
  for (std::size_t i = 0; i < n.vias.size(); ++i) {
    const auto& v = n.vias[i];
    out.push_back(Shape{name, v.lower_layer, via_pad(rules, v, v.lower_layer), ShapeKind::ViaPad, i});
    out.push_back(
        Shape{name, v.lower_layer + 1, via_pad(rules, v, v.lower_layer + 1), ShapeKind::ViaPad, i});
  }
}

}  // namespace

std::vector<Shape> Layout::shapes() const {
  std::vector<Shape> out;
  for (const auto& [name, n] : nets_) append_net_shapes(*rules_, name, n, out);
  return out;
}

std::vector<Shape> Layout::net_shapes(const std::string& net) const {
  std::vector<Shape> out;
  if (const auto* n = find_net(net)) append_net_shapes(*rules_, net, *n, out);
  return out;
}

void Layout::add_segment(WireSegment s) {
  auto& n = nets_[s.net];
  n.segments.push_back(std::move(s));
}

void Layout::add_via(Via v) {
  auto& n = nets_[v.net];
  n.vias.push_back(std::move(v));
}

bool is_off_track(const TechRules& rules, const WireSegment& s) {
  return !on_track(rules, s.layer, s.across());
}

// ---------------------------------------------------------------------------
// ShapeIndex

Nm ShapeIndex::floor_div(Nm a, Nm b) {
  Nm q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

namespace {

std::uint64_t cell_key(Nm bx, Nm by) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(bx)) << 32) |
         static_cast<std::uint32_t>(by);
}

}  // namespace

ShapeIndex::ShapeIndex(const TechRules& rules) {
  grids_.resize(static_cast<std::size_t>(rules.layer_count()) + 1);
  for (const auto& l : rules.layers) grids_[static_cast<std::size_t>(l.index)].bucket = 16 * l.mmp;
  grids_[0].bucket = std::max<Nm>(1, 4 * std::max(rules.site_width, rules.site_height));
}

ShapeIndex::ShapeIndex(const TechRules& rules, std::vector<Shape> shapes) : ShapeIndex(rules) {
  for (auto& s : shapes) insert(std::move(s));
}

std::size_t ShapeIndex::insert(Shape s) {
  if (s.layer < 0 || static_cast<std::size_t>(s.layer) >= grids_.size())
    throw LookupError("shape on unknown layer " + std::to_string(s.layer));
  const std::size_t id = shapes_.size();
  auto& g = grids_[static_cast<std::size_t>(s.layer)];
  const Nm bx0 = floor_div(s.rect.xlo, g.bucket), bx1 = floor_div(s.rect.xhi, g.bucket);
  const Nm by0 = floor_div(s.rect.ylo, g.bucket), by1 = floor_div(s.rect.yhi, g.bucket);
  for (Nm bx = bx0; bx <= bx1; ++bx)
    for (Nm by = by0; by <= by1; ++by) g.cells[cell_key(bx, by)].push_back(id);
  shapes_.push_back(std::move(s));
  alive_.push_back(true);
  stamp_.push_back(0);
  return id;
}

std::vector<std::size_t> ShapeIndex::query(int layer, const Rect& r) const {
  std::vector<std::size_t> out;
  if (layer < 0 || static_cast<std::size_t>(layer) >= grids_.size()) return out;
  const auto& g = grids_[static_cast<std::size_t>(layer)];
  ++epoch_;
  const Nm bx0 = floor_div(r.xlo, g.bucket), bx1 = floor_div(r.xhi, g.bucket);
  const Nm by0 = floor_div(r.ylo, g.bucket), by1 = floor_div(r.yhi, g.bucket);
  for (Nm bx = bx0; bx <= bx1; ++bx) {
    for (Nm by = by0; by <= by1; ++by) {
      auto it = g.cells.find(cell_key(bx, by));
      if (it == g.cells.end()) continue;
      for (std::size_t id : it->second) {
        if (stamp_[id] == epoch_) continue;
        stamp_[id] = epoch_;
        if (alive_[id] && touches(shapes_[id].rect, r)) out.push_back(id);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

std::vector<DrcViolation> drc_check(const Layout& layout) {
  const auto& rules = layout.rules();
  ShapeIndex index(rules, layout.shapes());
  std::vector<DrcViolation> out;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const Shape& a = index.shape(i);
    const Nm s = rules.layer(a.layer).min_spacing;
    for (std::size_t j : index.query(a.layer, a.rect.expanded(s))) {
      if (j <= i) continue;
      const Shape& b = index.shape(j);
      if (a.net == b.net) continue;
      const Nm d2 = distance_sq(a.rect, b.rect);
      if (d2 < s * s) out.push_back({a, b, d2});
    }
  }
  return out;
}

Nm net_length(const RoutedNet& net) {
  Nm total = 0;
  for (const auto& s : net.segments) total += s.length();
  return total;
}

LengthStats net_length_stats(const Layout& layout) {
  std::vector<double> lengths;
  for (const auto& [name, n] : layout.nets()) {
    if (layout.guard_nets().count(name)) continue;
    lengths.push_back(static_cast<double>(net_length(n)));
  }
  if (lengths.empty()) throw Error("net length statistics need at least one routed net");
  LengthStats st;
  st.count = lengths.size();
  double sum = 0;
  for (double v : lengths) sum += v;
  st.mean = sum / static_cast<double>(lengths.size());
  double ss = 0;
  for (double v : lengths) ss += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(ss / static_cast<double>(lengths.size()));
  return st;
}

std::vector<Shape> neighbors(const Layout& layout, const Shape& shape, Nm radius) {
  ShapeIndex index(layout.rules(), layout.shapes());
  std::vector<Shape> out;
  for (std::size_t id : index.query(shape.layer, shape.rect.expanded(radius))) {
    const Shape& s = index.shape(id);
    if (s == shape) continue;
    if (distance_sq(s.rect, shape.rect) <= radius * radius) out.push_back(s);
  }
  return out;
}

void validate_layout(const Layout& layout) {
  const auto& rules = layout.rules();
  for (const auto& [name, n] : layout.nets()) {
    for (const auto& s : n.segments) {
      if (s.net != name) throw Error("segment of net '" + s.net + "' filed under '" + name + "'");
      if (!rules.has_layer(s.layer))
        throw Error("net '" + name + "': segment on unknown layer " + std::to_string(s.layer));
      if (s.a.x != s.b.x && s.a.y != s.b.y)
        throw Error("net '" + name + "': segment is not axis-aligned");
      if (s.length() <= 0) throw Error("net '" + name + "': zero-length segment");
      if (s.width <= 0) throw Error("net '" + name + "': non-positive segment width");
    }
    for (const auto& v : n.vias) {
      if (v.lower_layer < 1 || v.lower_layer >= rules.layer_count())
        throw Error("net '" + name + "': via lower layer " + std::to_string(v.lower_layer) +
                    " out of range");
      for (int l : {v.lower_layer, v.lower_layer + 1}) {
        bool landed = false;
        for (const auto& s : n.segments)
          if (s.layer == l && s.rect().contains(v.at)) landed = true;
        if (!landed)
          throw Error("net '" + name + "': via at (" + format_um(v.at.x) + ", " + format_um(v.at.y) +
                      ") has no segment on layer " + std::to_string(l));
      }
    }
  }
  for (const auto& g : layout.guard_nets())
    if (!layout.find_net(g)) throw Error("guard net '" + g + "' has no geometry");
  for (const auto& [name, p] : layout.placements()) {
    if (p.rows < 1 || p.cols < 1) throw Error("placement '" + name + "' has an empty footprint");
    if (rules.device_rows > 0 &&
        (p.row < 0 || p.col < 0 || p.row + p.rows > rules.device_rows ||
         p.col + p.cols > rules.device_cols))
      throw Error("placement '" + name + "' lies outside the site grid");
  }
}

std::string write_layout(const Layout& layout) {
  std::ostringstream out;
  const auto& rules = layout.rules();
  out << "layout 1\n";
  out << "tech layers=" << rules.layer_count() << " grid=" << rules.device_rows << 'x'
      << rules.device_cols << '\n';
  for (const auto& [name, p] : layout.placements()) {
    out << "placement " << name << ' ' << p.row << ' ' << p.col << ' ' << p.rows << ' ' << p.cols;
    if (p.locked) out << " locked";
    if (p.fill) out << " fill";
    out << '\n';
  }
  for (const auto& [name, n] : layout.nets()) {
    out << "net " << name;
    if (n.locked) out << " locked";
    if (layout.guard_nets().count(name)) out << " guard";
    out << '\n';
    for (const auto& s : n.segments) {
      out << "segment " << name << ' ' << s.layer << ' ' << format_um(s.a.x) << ' '
          << format_um(s.a.y) << ' ' << format_um(s.b.x) << ' ' << format_um(s.b.y) << ' '
          << format_um(s.width) << '\n';
    }
    for (const auto& v : n.vias) {
      out << "via " << name << ' ' << v.lower_layer << ' ' << format_um(v.at.x) << ' '
          << format_um(v.at.y) << '\n';
    }
  }
  return out.str();
}

Layout read_layout(std::string_view text, std::shared_ptr<const TechRules> rules) {
  Layout layout(rules);
  detail::LineScanner scan(text);
  bool saw_header = false;
  while (scan.next_line()) {
    const auto& toks = scan.tokens();
    const std::string_view kw = toks[0].text;
    if (!saw_header) {
      if (kw != "layout" || toks.size() != 2 || toks[1].text != "1")
        scan.fail("expected header 'layout 1'");
      saw_header = true;
      continue;
    }
    if (kw == "tech") {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        const auto t = toks[i].text;
        if (t.rfind("layers=", 0) == 0 && t.substr(7) != std::to_string(rules->layer_count()))
          scan.fail("layout was written for a " + std::string(t.substr(7)) +
                        "-layer technology, rules have " + std::to_string(rules->layer_count()),
                    i);
      }
    } else if (kw == "placement") {
      if (toks.size() < 6) scan.fail("expected: placement <name> <row> <col> <rows> <cols> [locked] [fill]");
      Placement p;
      p.name = std::string(toks[1].text);
      p.row = static_cast<int>(scan.integer(2));
      p.col = static_cast<int>(scan.integer(3));
      p.rows = static_cast<int>(scan.integer(4));
      p.cols = static_cast<int>(scan.integer(5));
      for (std::size_t i = 6; i < toks.size(); ++i) {
        if (toks[i].text == "locked") p.locked = true;
        else if (toks[i].text == "fill") p.fill = true;
        else scan.fail("unknown placement flag", i);
      }
      if (!layout.placements().emplace(p.name, p).second) scan.fail("duplicate placement", 1);
    } else if (kw == "net") {
      if (toks.size() < 2) scan.fail("expected: net <name> [locked] [guard]");
      const std::string name(toks[1].text);
      if (layout.nets().count(name)) scan.fail("duplicate net", 1);
      auto& n = layout.nets()[name];
      for (std::size_t i = 2; i < toks.size(); ++i) {
        if (toks[i].text == "locked") n.locked = true;
        else if (toks[i].text == "guard") layout.guard_nets().insert(name);
        else scan.fail("unknown net flag", i);
      }
    } else if (kw == "segment") {
      if (toks.size() != 8) scan.fail("expected: segment <net> <layer> <x1> <y1> <x2> <y2> <width>");
      WireSegment s;
      s.net = std::string(toks[1].text);
      if (!layout.nets().count(s.net)) scan.fail("segment before its net record", 1);
      s.layer = static_cast<int>(scan.integer(2));
      if (!rules->has_layer(s.layer)) scan.fail("unknown layer", 2);
      s.a = {scan.length(3), scan.length(4)};
      s.b = {scan.length(5), scan.length(6)};
      s.width = scan.length(7);
      if (s.a.x != s.b.x && s.a.y != s.b.y) scan.fail("segment is not axis-aligned", 3);
      if (s.a == s.b) scan.fail("zero-length segment", 3);
      if (s.width <= 0) scan.fail("width must be positive", 7);
      layout.add_segment(std::move(s));
    } else if (kw == "via") {
      if (toks.size() != 5) scan.fail("expected: via <net> <lower_layer> <x> <y>");
      Via v;
      v.net = std::string(toks[1].text);
      if (!layout.nets().count(v.net)) scan.fail("via before its net record", 1);
      v.lower_layer = static_cast<int>(scan.integer(2));
      if (v.lower_layer < 1 || v.lower_layer >= rules->layer_count())
        scan.fail("via lower layer out of range", 2);
      v.at = {scan.length(3), scan.length(4)};
      layout.add_via(std::move(v));
    } else {
      scan.fail("unknown record '" + std::string(kw) + "'");
    }
  }
  if (!saw_header) throw ParseError("empty layout file", 1);
  try {
    validate_layout(layout);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), scan.line());
  }
  return layout;
}

}  // namespace shieldroute
