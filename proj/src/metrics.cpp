#include "shieldroute/metrics.hpp"

#include <deque>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "shieldroute/error.hpp"
#include "text_scan.hpp"

namespace shieldroute {

TriggerSpace trigger_space(const Layout& layout) {
  const auto& rules = layout.rules();
  const int rows = rules.device_rows, cols = rules.device_cols;
  std::vector<char> occupied(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0);
  auto at = [&](int r, int c) -> char& { return occupied[static_cast<std::size_t>(r) * cols + c]; };
  for (const auto& [name, p] : layout.placements()) {
    if (p.fill) continue;
    for (int r = std::max(0, p.row); r < std::min(rows, p.row + p.rows); ++r)
      for (int c = std::max(0, p.col); c < std::min(cols, p.col + p.cols); ++c) at(r, c) = 1;
  }
  TriggerSpace ts;
  std::vector<char> seen(occupied.size(), 0);
  for (int r0 = 0; r0 < rows; ++r0) {
    for (int c0 = 0; c0 < cols; ++c0) {
      const std::size_t k0 = static_cast<std::size_t>(r0) * cols + c0;
      if (occupied[k0] || seen[k0]) continue;
      TriggerGroup g;
      std::deque<std::pair<int, int>> q{{r0, c0}};
      seen[k0] = 1;
      while (!q.empty()) {
        const auto [r, c] = q.front();
        q.pop_front();
        g.sites.push_back({r, c});
        const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int rr = r + dr[d], cc = c + dc[d];
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const std::size_t k = static_cast<std::size_t>(rr) * cols + cc;
          if (occupied[k] || seen[k]) continue;
          seen[k] = 1;
          q.push_back({rr, cc});
        }
      }
      std::sort(g.sites.begin(), g.sites.end());
      g.size = static_cast<int>(g.sites.size());
      ts.empty_sites += g.size;
      ++ts.histogram[g.size];
      ts.groups.push_back(std::move(g));
    }
  }
  return ts;
}

double net_blockage(const ExposureReport& report) {
  if (report.nets.empty()) throw Error("net blockage needs at least one target net");
  return 100.0 * report.blocked_fraction();
}

bool RouteDistanceHeatmap::all_zero() const {
  for (const auto& row : cells)
    for (double v : row)
      if (v != 0.0) return false;
  return true;
}

std::size_t RouteDistanceHeatmap::size_bin(int size) const {
  std::size_t b = 0;
  while (b + 1 < size_edges.size() && size >= size_edges[b + 1]) ++b;
  return b;
}

std::size_t RouteDistanceHeatmap::z_bin(double z) const {
  if (z < 0) return 0;
  std::size_t b = 1;
  while (b < z_edges.size() && z >= z_edges[b]) ++b;
  return b;
}

RouteDistanceHeatmap route_distance(const Layout& layout, const ExposureReport& exposure, const TriggerSpace& space,
                                    Nm via_penalty) {
  const auto& rules = layout.rules();
  RouteDistanceHeatmap hm;
  const LengthStats st = net_length_stats(layout);
  hm.mean_len = st.mean;
  hm.stddev_len = st.stddev;

  const int grid = std::max(1, rules.device_rows * rules.device_cols);
  for (int e = 1; e <= grid; e *= 2) hm.size_edges.push_back(e);
  for (int k = 0; k <= 12; ++k) hm.z_edges.push_back(0.5 * k);  // 0, 0.5, ..., 6 (6 opens the overflow bin)
  const std::size_t nz = hm.z_edges.size() + 1;  // below-zero bin + 12 half-sigma bins + overflow
  hm.cells.assign(nz, std::vector<double>(hm.size_edges.size(), 0.0));

  for (const auto& [net, ne] : exposure.nets) {
    for (const auto& se : ne.segments) {
      for (Face f : kAllFaces) {
        for (const auto& iv : se.open(f)) {
          ExposurePoint p{net, se.segment, f, se.layer, iv, make_rect(se.axis, iv.lo, iv.hi, se.across, se.across)};
          hm.points.push_back(p);
        }
      }
    }
  }
  for (const auto& g : space.groups) hm.group_sizes.push_back(g.size);

  hm.raw_distances = hm.stddev_len == 0.0;
  std::vector<std::vector<int>> counts(nz, std::vector<int>(hm.size_edges.size(), 0));
  std::vector<int> column(hm.size_edges.size(), 0);
  for (std::size_t pi = 0; pi < hm.points.size(); ++pi) {
    const auto& p = hm.points[pi];
    for (std::size_t gi = 0; gi < space.groups.size(); ++gi) {
      Nm best = std::numeric_limits<Nm>::max();
      for (const auto& [r, c] : space.groups[gi].sites) best = std::min(best, manhattan(p.footprint, rules.site_rect(r, c)));
      const Nm d = best + via_penalty * p.layer;
      const double z = hm.raw_distances ? static_cast<double>(d) / 1000.0
                                        : (static_cast<double>(d) - hm.mean_len) / hm.stddev_len;
      hm.pairs.push_back({pi, gi, d, z});
      const std::size_t sb = hm.size_bin(space.groups[gi].size);
      ++counts[hm.z_bin(z)][sb];
      ++column[sb];
    }
  }
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t s = 0; s < column.size(); ++s)
      if (column[s] > 0) hm.cells[z][s] = static_cast<double>(counts[z][s]) / column[s];
  return hm;
}

TrojanDescriptor a2_analog() { return {"A2-analog", 2, 20, false}; }
TrojanDescriptor a2_digital() { return {"A2-digital", 91, 1444, true}; }

FeasibilityResult feasibility(const RouteDistanceHeatmap& hm, const TrojanDescriptor& trojan) {
  FeasibilityResult res;
  const double bound = hm.mean_len + 3.0 * hm.stddev_len;
  for (const auto& pr : hm.pairs) {
    if (hm.group_sizes[pr.group] < trojan.placement_sites) continue;
    if (trojan.timing_critical && static_cast<double>(pr.distance) > bound) continue;
    if (!res.witness || pr.distance < res.witness->distance) res.witness = pr;
  }
  res.feasible = res.witness.has_value();
  return res;
}

std::string metrics_to_json(const TriggerSpace& space, const ExposureReport& exposure,
                            const RouteDistanceHeatmap& hm, const std::vector<TrojanDescriptor>& trojans) {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json ts;
  ts["empty_sites"] = space.empty_sites;
  ts["groups"] = space.groups.size();
  ordered_json hist = ordered_json::array();
  for (const auto& [size, count] : space.histogram) hist.push_back({{"size", size}, {"count", count}});
  ts["histogram"] = hist;
  j["trigger_space"] = ts;

  ordered_json nb;
  nb["percent"] = exposure.nets.empty() ? 0.0 : net_blockage(exposure);
  ordered_json per = ordered_json::object();
  for (const auto& [name, ne] : exposure.nets) per[name] = 100.0 * ne.blocked_fraction();
  nb["per_net"] = per;
  j["net_blockage"] = nb;

  ordered_json rd;
  rd["mean_net_length_um"] = hm.mean_len / 1000.0;
  rd["stddev_net_length_um"] = hm.stddev_len / 1000.0;
  rd["raw_distances"] = hm.raw_distances;
  rd["size_bin_lower_edges"] = hm.size_edges;
  ordered_json zl = ordered_json::array();
  zl.push_back("<0");
  for (std::size_t k = 0; k + 1 < hm.z_edges.size(); ++k)
    zl.push_back(detail::format_real(hm.z_edges[k]) + "-" + detail::format_real(hm.z_edges[k + 1]));
  zl.push_back(">=" + detail::format_real(hm.z_edges.back()));
  rd["z_bins"] = zl;
  rd["cells"] = hm.cells;
  rd["exposure_points"] = hm.points.size();
  rd["pairs"] = hm.pairs.size();
  rd["all_zero"] = hm.all_zero();
  j["route_distance"] = rd;

  ordered_json feas = ordered_json::array();
  for (const auto& t : trojans) {
    const auto r = feasibility(hm, t);
    ordered_json f;
    f["trojan"] = t.name;
    f["std_cells"] = t.std_cells;
    f["placement_sites"] = t.placement_sites;
    f["timing_critical"] = t.timing_critical;
    f["feasible"] = r.feasible;
    if (r.witness) {
      const auto& p = hm.points[r.witness->point];
      ordered_json w;
      w["net"] = p.net;
      w["segment"] = p.segment;
      w["face"] = face_name(p.face);
      w["interval_um"] = {p.interval.lo / 1000.0, p.interval.hi / 1000.0};
      w["group"] = r.witness->group;
      w["group_size"] = hm.group_sizes[r.witness->group];
      w["distance_um"] = r.witness->distance / 1000.0;
      w["z"] = r.witness->z;
      f["witness"] = w;
    } else {
      f["witness"] = nullptr;
    }
    feas.push_back(f);
  }
  j["feasibility"] = feas;
  return j.dump(2) + "\n";
}

std::string heatmap_to_csv(const RouteDistanceHeatmap& hm) {
  std::ostringstream out;
  out << "z_bin";
  for (int e : hm.size_edges) out << ",size_ge_" << e;
  out << '\n';
  for (std::size_t z = 0; z < hm.cells.size(); ++z) {
    if (z == 0) out << "lt_0";
    else if (z < hm.z_edges.size()) out << detail::format_real(hm.z_edges[z - 1]) << "_to_" << detail::format_real(hm.z_edges[z]);
    else out << "ge_" << detail::format_real(hm.z_edges.back());
    for (double v : hm.cells[z]) out << ',' << detail::format_real(v);
    out << '\n';
  }
  return out.str();
}

std::string trigger_histogram_to_csv(const TriggerSpace& space) {
  std::ostringstream out;
  out << "group_size,count\n";
  for (const auto& [size, count] : space.histogram) out << size << ',' << count << '\n';
  return out.str();
}

}  // namespace shieldroute
