#include "shieldroute/exposure.hpp"

#include <algorithm>
#include "json.hpp"

#include "shieldroute/error.hpp"

namespace shieldroute {

const char* face_name(Face f) {
  switch (f) {
    case Face::LateralLow: return "lateral_low";
    case Face::LateralHigh: return "lateral_high";
    case Face::EndLow: return "end_low";
    case Face::EndHigh: return "end_high";
    case Face::Top: return "top";
    case Face::Bottom: return "bottom";
  }
  return "?";
}

Nm SegmentExposure::open_weight() const {
  Nm w = 0;
  for (Face f : kAllFaces)
    for (const auto& iv : open(f)) w += is_end_face(f) ? 1 : iv.length();
  return w;
}

namespace {

bool is_self(const Shape& s, const std::string& net, std::size_t seg) {
  return s.kind == ShapeKind::Segment && s.index == seg && s.net == net;
}

std::vector<Rect> device_blockers(const Layout& layout) {
  std::vector<Rect> out;
  for (const auto& [name, p] : layout.placements()) {
    if (p.fill) continue;
    out.push_back({p.col * layout.rules().site_width, p.row * layout.rules().site_height,
                   (p.col + p.cols) * layout.rules().site_width,
                   (p.row + p.rows) * layout.rules().site_height});
  }
  return out;
}

// Complement of the union of closed blocked spans within [lo, hi).
std::vector<Interval> complement(std::vector<Interval> blocked, Nm lo, Nm hi) {
  for (auto& b : blocked) {
    b.lo = std::max(b.lo, lo);
    b.hi = std::min(b.hi, hi);
  }
  std::erase_if(blocked, [](const Interval& b) { return b.hi <= b.lo; });
  std::sort(blocked.begin(), blocked.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> open;
  Nm cursor = lo;
  for (const auto& b : blocked) {
    if (b.lo > cursor) open.push_back({cursor, b.lo});
    cursor = std::max(cursor, b.hi);
  }
  if (cursor < hi) open.push_back({cursor, hi});
  return open;
}

}  // namespace

ExposureScanner::ExposureScanner(const Layout& layout)
    : layout_(layout), rules_(layout.rules()), index_(rules_, layout.shapes()), device_(device_blockers(layout)) {}

SegmentExposure ExposureScanner::scan(const std::string& net, std::size_t seg_index) const {
    const WireSegment& seg = layout_.find_net(net)->segments[seg_index];
    SegmentExposure ex;
    ex.net = net;
    ex.segment = seg_index;
    ex.layer = seg.layer;
    ex.axis = seg.axis();
    ex.lo = seg.lo();
    ex.hi = seg.hi();
    ex.across = seg.across();
    const Rect r = seg.rect();
    const Axis ax = ex.axis, cx = other(ax);
    const int L = seg.layer;
    const Nm s = rules_.layer(L).min_spacing;

    auto self = [&](const Shape& sh) { return is_self(sh, net, seg_index); };

    // Lateral faces: same layer, band beyond the side edge.
    for (Face f : {Face::LateralLow, Face::LateralHigh}) {
      const bool high = f == Face::LateralHigh;
      const Nm edge = high ? r.hi(cx) : r.lo(cx);
      const Nm far = high ? edge + s : edge - s;
      const Rect q = make_rect(ax, ex.lo - s, ex.hi + s, std::min(edge, far), std::max(edge, far));
      std::vector<Interval> blocked;
      for (std::size_t id : index_.query(L, q)) {
        const Shape& sh = index_.shape(id);
        if (self(sh)) continue;
        const bool in_band = high ? sh.rect.hi(cx) > edge : sh.rect.lo(cx) < edge;
        if (!in_band) continue;
        blocked.push_back({sh.rect.lo(ax) - s, sh.rect.hi(ax) + s});
      }
      ex.unblocked[static_cast<std::size_t>(f)] = complement(std::move(blocked), ex.lo, ex.hi);
    }

    // Top / bottom faces: adjacent layer, closed band widened by its spacing.
    for (Face f : {Face::Top, Face::Bottom}) {
      const int adj = f == Face::Top ? L + 1 : L - 1;
      std::vector<Interval> blocked;
      if (adj > rules_.layer_count()) {
        // nothing above the top routing layer
      } else {
        const Nm sa = rules_.layer(adj >= 1 ? adj : 1).min_spacing;
        const Rect q = make_rect(ax, ex.lo - sa, ex.hi + sa, r.lo(cx) - sa, r.hi(cx) + sa);
        for (const Rect& b : adjacent_hits(adj, q)) blocked.push_back({b.lo(ax) - sa, b.hi(ax) + sa});
      }
      ex.unblocked[static_cast<std::size_t>(f)] = complement(std::move(blocked), ex.lo, ex.hi);
    }

    // End faces: tip box on the same layer, plus boxes beyond the tip on r +/- 1.
    for (Face f : {Face::EndLow, Face::EndHigh}) {
      const bool high = f == Face::EndHigh;
      const Nm tip = high ? ex.hi : ex.lo;
      bool blocked = false;
      {
        const Rect q = make_rect(ax, high ? tip : tip - s, high ? tip + s : tip, r.lo(cx), r.hi(cx));
        for (std::size_t id : index_.query(L, q)) {
          const Shape& sh = index_.shape(id);
          if (self(sh)) continue;
          const bool beyond = high ? sh.rect.hi(ax) > tip : sh.rect.lo(ax) < tip;
          const bool inside = sh.rect.lo(cx) < r.hi(cx) && sh.rect.hi(cx) > r.lo(cx);
          if (beyond && inside) blocked = true;
        }
      }
      for (int adj : {L - 1, L + 1}) {
        if (blocked || adj > rules_.layer_count()) continue;
        const Nm sa = rules_.layer(adj >= 1 ? adj : 1).min_spacing;
        const Rect q = make_rect(ax, high ? tip : tip - sa, high ? tip + sa : tip, r.lo(cx) - sa, r.hi(cx) + sa);
        for (const Rect& b : adjacent_hits(adj, q)) {
          if (high ? b.hi(ax) > tip : b.lo(ax) < tip) blocked = true;
        }
      }
      if (!blocked) {
        ex.unblocked[static_cast<std::size_t>(f)] = {high ? Interval{ex.hi - 1, ex.hi} : Interval{ex.lo, ex.lo + 1}};
      }
    }
    return ex;
}

// Shapes on an adjacent plane (layer 0 = device placements) touching q.
std::vector<Rect> ExposureScanner::adjacent_hits(int layer, const Rect& q) const {
    std::vector<Rect> out;
    if (layer == 0) {
      for (const Rect& d : device_)
        if (touches(d, q)) out.push_back(d);
      return out;
    }
    for (std::size_t id : index_.query(layer, q)) out.push_back(index_.shape(id).rect);
    return out;
}

namespace {

void accumulate(ExposureReport& rep) {
  rep.total_weight = rep.open_weight = 0;
  for (auto& [name, ne] : rep.nets) {
    ne.total_weight = ne.open_weight = 0;
    for (const auto& se : ne.segments) {
      ne.total_weight += se.total_weight();
      ne.open_weight += se.open_weight();
    }
    rep.total_weight += ne.total_weight;
    rep.open_weight += ne.open_weight;
  }
}

const RoutedNet& routed_target(const Layout& layout, const std::string& t) {
  const RoutedNet* n = layout.find_net(t);
  if (!n || n->segments.empty()) throw LookupError("target net '" + t + "' is not routed");
  return *n;
}

}  // namespace

ExposureReport scan_exposure(const Layout& layout, const std::set<std::string>& targets) {
  for (const auto& t : targets) routed_target(layout, t);
  ExposureScanner scanner(layout);
  ExposureReport rep;
  for (const auto& t : targets) {
    auto& ne = rep.nets[t];
    const auto& n = *layout.find_net(t);
    for (std::size_t i = 0; i < n.segments.size(); ++i) ne.segments.push_back(scanner.scan(t, i));
  }
  accumulate(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Sampling reference

namespace {

struct Sampled {
  int layer;  // 0 = device plane
  Rect rect;
  const Shape* shape;  // null for device
};

// Points lo, lo+step, ..., plus hi (closed range).
std::vector<Nm> samples_closed(Nm lo, Nm hi, Nm step) {
  std::vector<Nm> v;
  for (Nm p = lo; p < hi; p += step) v.push_back(p);
  v.push_back(hi);
  return v;
}

// Points of (lo, hi] on the half-step lattice, plus hi.
std::vector<Nm> samples_open_lo(Nm lo, Nm hi, Nm step) {
  std::vector<Nm> v;
  for (Nm p = lo + step; p < hi; p += step) v.push_back(p);
  v.push_back(hi);
  return v;
}

// Points strictly inside (lo, hi).
std::vector<Nm> samples_open(Nm lo, Nm hi, Nm step) {
  std::vector<Nm> v;
  for (Nm p = lo + step; p < hi; p += step) v.push_back(p);
  if (v.empty() && hi - lo > 1) v.push_back(lo + (hi - lo) / 2);
  return v;
}

bool hits(const std::vector<Nm>& pts, Nm lo, Nm hi) {
  for (Nm p : pts)
    if (p >= lo && p <= hi) return true;
  return false;
}

}  // namespace

ExposureReport voxel_oracle(const Layout& layout, const std::set<std::string>& targets, Nm resolution) {
  const auto& rules = layout.rules();
  if (resolution <= 0 || resolution % 2 != 0) throw Error("voxel resolution must be a positive even number of nm");
  for (const auto& l : rules.layers)
    if (resolution * 4 > l.min_spacing)
      throw Error("voxel resolution " + std::to_string(resolution) + " nm is coarser than min_spacing/4 on layer " +
                  std::to_string(l.index));
  for (const auto& t : targets) routed_target(layout, t);

  const auto shapes = layout.shapes();
  std::vector<Sampled> all;
  for (const auto& s : shapes) all.push_back({s.layer, s.rect, &s});
  for (const auto& [name, p] : layout.placements())
    if (!p.fill)
      all.push_back({0,
                     {p.col * rules.site_width, p.row * rules.site_height, (p.col + p.cols) * rules.site_width,
                      (p.row + p.rows) * rules.site_height},
                     nullptr});

  const Nm h = resolution / 2;
  ExposureReport rep;
  for (const auto& t : targets) {
    const auto& n = *layout.find_net(t);
    auto& ne = rep.nets[t];
    for (std::size_t si = 0; si < n.segments.size(); ++si) {
      const auto& seg = n.segments[si];
      const Axis ax = seg.axis(), cx = other(ax);
      const Rect r = seg.rect();
      const int L = seg.layer;
      SegmentExposure ex;
      ex.net = t;
      ex.segment = si;
      ex.layer = L;
      ex.axis = ax;
      ex.lo = seg.lo();
      ex.hi = seg.hi();
      ex.across = seg.across();

      auto blocked_by = [&](int layer, const std::vector<Nm>& along, const std::vector<Nm>& across) {
        for (const auto& sm : all) {
          if (sm.layer != layer) continue;
          if (sm.shape && sm.shape->kind == ShapeKind::Segment && sm.shape->net == t && sm.shape->index == si) continue;
          if (hits(along, sm.rect.lo(ax), sm.rect.hi(ax)) && hits(across, sm.rect.lo(cx), sm.rect.hi(cx)))
            return true;
        }
        return false;
      };
      auto spacing_of = [&](int layer) { return rules.layer(std::max(layer, 1)).min_spacing; };

      for (Face f : {Face::LateralLow, Face::LateralHigh, Face::Top, Face::Bottom}) {
        int layer = L;
        Nm s = spacing_of(L);
        std::vector<Nm> across;
        if (f == Face::LateralHigh) {
          across = samples_open_lo(r.hi(cx), r.hi(cx) + s, h);
        } else if (f == Face::LateralLow) {
          across = samples_open_lo(-r.lo(cx), -r.lo(cx) + s, h);
          for (auto& v : across) v = -v;
        } else {
          layer = f == Face::Top ? L + 1 : L - 1;
          if (layer > rules.layer_count()) {
            ex.unblocked[static_cast<std::size_t>(f)] = {{ex.lo, ex.hi}};
            continue;
          }
          s = spacing_of(layer);
          across = samples_closed(r.lo(cx) - s, r.hi(cx) + s, h);
        }
        std::vector<Interval> open;
        for (Nm v0 = ex.lo; v0 < ex.hi; v0 += resolution) {
          const Nm v1 = std::min(ex.hi, v0 + resolution);
          const Nm c = v0 + (v1 - v0) / 2;
          const bool b = blocked_by(layer, samples_closed(c - s, c + s, h), across);
          if (b) continue;
          if (!open.empty() && open.back().hi == v0) open.back().hi = v1;
          else open.push_back({v0, v1});
        }
        ex.unblocked[static_cast<std::size_t>(f)] = std::move(open);
      }

      for (Face f : {Face::EndLow, Face::EndHigh}) {
        const bool high = f == Face::EndHigh;
        const Nm tip = high ? ex.hi : ex.lo;
        auto beyond = [&](Nm depth) {
          auto v = samples_open_lo(high ? tip : -tip, (high ? tip : -tip) + depth, h);
          if (!high)
            for (auto& x : v) x = -x;
          return v;
        };
        const Nm s = spacing_of(L);
        bool b = blocked_by(L, beyond(s), samples_open(r.lo(cx), r.hi(cx), h));
        for (int adj : {L - 1, L + 1}) {
          if (b || adj > rules.layer_count()) continue;
          const Nm sa = spacing_of(adj);
          b = blocked_by(adj, beyond(sa), samples_closed(r.lo(cx) - sa, r.hi(cx) + sa, h));
        }
        if (!b) ex.unblocked[static_cast<std::size_t>(f)] = {high ? Interval{ex.hi - 1, ex.hi} : Interval{ex.lo, ex.lo + 1}};
      }
      ne.segments.push_back(std::move(ex));
    }
  }
  accumulate(rep);
  return rep;
}

std::string exposure_to_json(const ExposureReport& report) {
  using nlohmann::ordered_json;
  auto um = [](Nm v) { return static_cast<double>(v) / 1000.0; };
  ordered_json j;
  j["blocked_fraction"] = report.blocked_fraction();
  ordered_json nets = ordered_json::object();
  for (const auto& [name, ne] : report.nets) {
    ordered_json jn;
    jn["blocked_fraction"] = ne.blocked_fraction();
    ordered_json segs = ordered_json::array();
    for (const auto& se : ne.segments) {
      ordered_json js;
      js["segment"] = se.segment;
      js["layer"] = se.layer;
      js["axis"] = se.axis == Axis::X ? "x" : "y";
      js["extent_um"] = {um(se.lo), um(se.hi)};
      js["across_um"] = um(se.across);
      ordered_json faces = ordered_json::object();
      for (Face f : kAllFaces) {
        ordered_json ivs = ordered_json::array();
        for (const auto& iv : se.open(f)) ivs.push_back({um(iv.lo), um(iv.hi)});
        faces[face_name(f)] = ivs;
      }
      js["unblocked"] = faces;
      segs.push_back(js);
    }
    jn["segments"] = segs;
    nets[name] = jn;
  }
  j["nets"] = nets;
  return j.dump(2) + "\n";
}

}  // namespace shieldroute
