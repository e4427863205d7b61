#include "shieldroute/tech.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "shieldroute/error.hpp"
#include "text_scan.hpp"

namespace shieldroute {

const RoutingLayer& TechRules::layer(int index) const {
  if (!has_layer(index)) throw LookupError("unknown routing layer " + std::to_string(index));
  return layers[static_cast<std::size_t>(index - 1)];
}

int TechRules::find_layer(std::string_view name) const {
  for (const auto& l : layers)
    if (l.name == name) return l.index;
  return 0;
}

namespace {

void check_layer(const RoutingLayer& l) {
  if (l.min_spacing <= 0) throw RuleError("min spacing must be positive", l.index);
  if (l.mmp < 2 * l.min_spacing)
    throw RuleError("pitch " + format_um(l.mmp) + " is below twice the min spacing " +
                        format_um(l.min_spacing),
                    l.index);
  if (l.default_width != l.mmp - l.min_spacing || l.default_width <= 0)
    throw RuleError("default width must equal pitch minus spacing", l.index);
}

}  // namespace

void validate(const TechRules& rules) {
  if (rules.layers.empty()) throw Error("technology defines no routing layers");
  for (std::size_t i = 0; i < rules.layers.size(); ++i) {
    const auto& l = rules.layers[i];
    if (l.index != static_cast<int>(i) + 1)
      throw RuleError("layer indices must be contiguous from 1", l.index);
    check_layer(l);
    if (i > 0 && rules.layers[i - 1].direction == l.direction)
      throw RuleError("preferred direction must alternate with the layer below", l.index);
  }
  if (!(rules.dielectric_constant > 1.0)) throw Error("dielectric constant must exceed 1");
  if (rules.device_rows < 0 || rules.device_cols < 0) throw Error("negative device grid");
}

TechRules parse_tech(std::string_view text) {
  TechRules rules;
  bool saw_dielectric = false;
  bool saw_site = false;
  detail::LineScanner scan(text);
  while (scan.next_line()) {
    const auto& toks = scan.tokens();
    const std::string_view kw = toks[0].text;
    if (kw == "layer") {
      if (toks.size() != 6 && toks.size() != 7)
        scan.fail("expected: layer <index> <name> <spacing_um> <pitch_um> <direction> [offset_um]");
      RoutingLayer l;
      l.index = static_cast<int>(scan.integer(1));
      if (l.index < 1) scan.fail("layer index must be >= 1", 1);
      l.name = std::string(toks[2].text);
      l.min_spacing = scan.length(3);
      l.mmp = scan.length(4);
      const std::string_view dir = toks[5].text;
      if (dir == "horizontal" || dir == "H" || dir == "h") {
        l.direction = Direction::Horizontal;
      } else if (dir == "vertical" || dir == "V" || dir == "v") {
        l.direction = Direction::Vertical;
      } else {
        scan.fail("direction must be horizontal or vertical", 5);
      }
      if (toks.size() == 7) l.track_offset = scan.length(6);
      l.default_width = l.mmp - l.min_spacing;
      for (const auto& other : rules.layers)
        if (other.index == l.index) scan.fail("duplicate layer index", 1);
      check_layer(l);
      rules.layers.push_back(std::move(l));
    } else if (kw == "site") {
      if (toks.size() != 5) scan.fail("expected: site <w_um> <h_um> <rows> <cols>");
      if (saw_site) scan.fail("duplicate site record");
      saw_site = true;
      rules.site_width = scan.length(1);
      rules.site_height = scan.length(2);
      rules.device_rows = static_cast<int>(scan.integer(3));
      rules.device_cols = static_cast<int>(scan.integer(4));
      if (rules.site_width <= 0 || rules.site_height <= 0 || rules.device_rows < 0 ||
          rules.device_cols < 0)
        scan.fail("site dimensions must be positive");
    } else if (kw == "dielectric") {
      if (toks.size() != 2) scan.fail("expected: dielectric <Dk>");
      if (saw_dielectric) scan.fail("duplicate dielectric record");
      saw_dielectric = true;
      rules.dielectric_constant = scan.real(1);
      if (!(rules.dielectric_constant > 1.0)) scan.fail("dielectric constant must exceed 1", 1);
    } else {
      scan.fail("unknown record '" + std::string(kw) + "'");
    }
  }
  std::sort(rules.layers.begin(), rules.layers.end(),
            [](const RoutingLayer& a, const RoutingLayer& b) { return a.index < b.index; });
  validate(rules);
  return rules;
}

std::string serialize_tech(const TechRules& rules) {
  std::ostringstream out;
  out << "# layer <index> <name> <min_spacing_um> <mmp_um> <direction> <offset_um>\n";
  for (const auto& l : rules.layers) {
    out << "layer " << l.index << ' ' << l.name << ' ' << format_um(l.min_spacing) << ' '
        << format_um(l.mmp) << ' '
        << (l.direction == Direction::Horizontal ? "horizontal" : "vertical") << ' '
        << format_um(l.track_offset) << '\n';
  }
  if (rules.site_width > 0) {
    out << "site " << format_um(rules.site_width) << ' ' << format_um(rules.site_height) << ' '
        << rules.device_rows << ' ' << rules.device_cols << '\n';
  }
  out << "dielectric " << detail::format_real(rules.dielectric_constant) << '\n';
  return out.str();
}

Nm min_jog_edit(const TechRules& rules, int layer) { return 2 * rules.layer(layer).mmp; }

Nm track_position(const TechRules& rules, int layer, Nm index) {
  const auto& l = rules.layer(layer);
  return l.track_offset + index * l.mmp;
}

namespace {

Nm floor_div(Nm a, Nm b) {
  Nm q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

bool on_track(const TechRules& rules, int layer, Nm c) {
  const auto& l = rules.layer(layer);
  const Nm r = (c - l.track_offset) % l.mmp;
  return r == 0;
}

Nm nearest_track(const TechRules& rules, int layer, Nm c) {
  const auto& l = rules.layer(layer);
  const Nm k = floor_div(c - l.track_offset, l.mmp);
  const Nm below = l.track_offset + k * l.mmp;
  const Nm above = below + l.mmp;
  return (c - below <= above - c) ? below : above;
}

}  // namespace shieldroute
