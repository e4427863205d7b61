#include "shieldroute/gds.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "text_scan.hpp"

namespace shieldroute {

namespace gds {

std::uint64_t encode_real8(double v) {
  if (v == 0.0) return 0;
  std::uint64_t sign = 0;
  if (v < 0) {
    sign = 1ull << 63;
    v = -v;
  }
  int exp = 0;
  while (v >= 1.0) {
    v /= 16.0;
    ++exp;
  }
  while (v < 1.0 / 16.0) {
    v *= 16.0;
    --exp;
  }
  auto mant = static_cast<std::uint64_t>(std::llround(std::ldexp(v, 56)));
  if (mant >= (1ull << 56)) {
    mant >>= 4;
    ++exp;
  }
  if (exp + 64 < 0 || exp + 64 > 127) throw Error("value out of range for an eight-byte real");
  return sign | (static_cast<std::uint64_t>(exp + 64) << 56) | mant;
}

double decode_real8(std::uint64_t bits) {
  const bool neg = (bits >> 63) != 0;
  const int exp = static_cast<int>((bits >> 56) & 0x7f) - 64;
  const std::uint64_t mant = bits & ((1ull << 56) - 1);
  const double v = std::ldexp(static_cast<double>(mant), 4 * exp - 56);
  return neg ? -v : v;
}

}  // namespace gds

namespace {

using namespace gds;

bool known_record(std::uint8_t t) { return t <= 0x3B; }

std::int16_t be16(const std::uint8_t* p) {
  return static_cast<std::int16_t>((static_cast<std::uint16_t>(p[0]) << 8) | p[1]);
}

std::int32_t be32(const std::uint8_t* p) {
  return static_cast<std::int32_t>((static_cast<std::uint32_t>(p[0]) << 24) |
                                   (static_cast<std::uint32_t>(p[1]) << 16) |
                                   (static_cast<std::uint32_t>(p[2]) << 8) | p[3]);
}

std::uint64_t be64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::vector<GdsRecord> split_records(const std::vector<std::uint8_t>& bytes) {
  std::vector<GdsRecord> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    if (!out.empty() && out.back().record_type == ENDLIB) {
      // Block padding after the library end is tolerated when it is all zeros.
      for (std::size_t i = pos; i < bytes.size(); ++i)
        if (bytes[i] != 0) throw StreamError("data after ENDLIB", i);
      break;
    }
    if (bytes.size() - pos < 4) throw StreamError("truncated record header", pos);
    GdsRecord r;
    r.offset = pos;
    r.length = static_cast<std::uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
    r.record_type = bytes[pos + 2];
    r.data_type = bytes[pos + 3];
    if (r.length < 4) throw StreamError("record length " + std::to_string(r.length) + " below 4", pos);
    if (r.length % 2 != 0)
      throw StreamError("odd record length " + std::to_string(r.length), pos);
    if (pos + r.length > bytes.size())
      throw StreamError("truncated record (needs " + std::to_string(r.length) + " bytes, " +
                            std::to_string(bytes.size() - pos) + " remain)",
                        pos);
    if (!known_record(r.record_type)) {
      std::ostringstream msg;
      msg << "unknown record type 0x" << std::hex << static_cast<int>(r.record_type);
      throw StreamError(msg.str(), pos);
    }
    r.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + r.length));
    pos += r.length;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Layer map

std::pair<int, int> LayerMap::find(const LayerTarget& t) const {
  for (const auto& [k, v] : entries)
    if (v == t) return k;
  std::string what = t.kind == LayerTarget::Kind::Device ? std::string("DEVICE")
                     : t.kind == LayerTarget::Kind::Via  ? "VIA" + std::to_string(t.index)
                                                         : "routing layer " + std::to_string(t.index);
  throw LookupError("layer map has no entry for " + what);
}

LayerMap parse_layer_map(std::string_view text, const TechRules& rules) {
  LayerMap map;
  detail::LineScanner scan(text);
  std::set<LayerTarget> seen;
  while (scan.next_line()) {
    if (scan.tokens().size() != 3) scan.fail("expected: <gds_layer> <gds_datatype> <layer_name>");
    const auto layer = scan.integer(0);
    const auto dtype = scan.integer(1);
    if (layer < 0 || layer > 65535 || dtype < 0 || dtype > 65535)
      scan.fail("gds layer/datatype out of range");
    const std::string name(scan.at(2));
    LayerTarget t;
    if (name == "DEVICE") {
      t = {LayerTarget::Kind::Device, 0};
    } else if (name.rfind("VIA", 0) == 0 && name.size() > 3 &&
               name.find_first_not_of("0123456789", 3) == std::string::npos) {
      const int k = std::stoi(name.substr(3));
      if (k < 1 || k >= rules.layer_count()) scan.fail("via layer out of range", 2);
      t = {LayerTarget::Kind::Via, k};
    } else {
      const int k = rules.find_layer(name);
      if (k == 0) scan.fail("unknown layer name '" + name + "'", 2);
      t = {LayerTarget::Kind::Routing, k};
    }
    if (!seen.insert(t).second) scan.fail("layer '" + name + "' mapped twice", 2);
    if (!map.entries.emplace(std::pair{static_cast<int>(layer), static_cast<int>(dtype)}, t).second)
      scan.fail("gds pair mapped twice");
  }
  return map;
}

std::string serialize_layer_map(const LayerMap& map, const TechRules& rules) {
  std::ostringstream out;
  for (const auto& [k, t] : map.entries) {
    out << k.first << ' ' << k.second << ' ';
    switch (t.kind) {
      case LayerTarget::Kind::Device: out << "DEVICE"; break;
      case LayerTarget::Kind::Via: out << "VIA" << t.index; break;
      case LayerTarget::Kind::Routing: out << rules.layer(t.index).name; break;
    }
    out << '\n';
  }
  return out.str();
}

LayerMap default_layer_map(const TechRules& rules) {
  LayerMap map;
  map.entries[{0, 0}] = {LayerTarget::Kind::Device, 0};
  for (const auto& l : rules.layers) {
    map.entries[{l.index, 0}] = {LayerTarget::Kind::Routing, l.index};
    if (l.index < rules.layer_count()) map.entries[{100 + l.index, 0}] = {LayerTarget::Kind::Via, l.index};
  }
  return map;
}

namespace {

std::string describe_pairs(const std::vector<std::pair<int, int>>& pairs) {
  std::string s = "unmapped gds layer/datatype pairs:";
  for (const auto& [l, d] : pairs) s += " " + std::to_string(l) + "/" + std::to_string(d);
  return s;
}

}  // namespace

UnmappedLayerError::UnmappedLayerError(std::vector<std::pair<int, int>> pairs)
    : Error(describe_pairs(pairs)), pairs_(std::move(pairs)) {}

// ---------------------------------------------------------------------------
// Reader

namespace {

struct Element {
  std::uint8_t kind = 0;
  std::size_t offset = 0;
  int layer = -1, datatype = 0;
  int pathtype = 0;
  std::int64_t width = 0;
  std::vector<Point> xy;
  std::string sname;
  bool reflect = false;
  double angle = 0, mag = 1;
  int cols = 0, rows = 0;
  std::map<int, std::string> props;
};

struct Structure {
  std::string name;
  std::vector<Element> elements;
};

std::string ascii(const GdsRecord& r) {
  std::string s(r.payload.begin(), r.payload.end());
  while (!s.empty() && s.back() == '\0') s.pop_back();
  return s;
}

void expect_type(const GdsRecord& r, std::uint8_t dt, std::size_t min_bytes = 0) {
  if (r.data_type != dt) throw StreamError("unexpected data type for record", r.offset);
  if (r.payload.size() < min_bytes) throw StreamError("record payload too short", r.offset);
}

class StreamParser {
 public:
  explicit StreamParser(const std::vector<GdsRecord>& recs) : recs_(recs) {}

  std::vector<Structure> parse() {
    if (recs_.empty()) throw StreamError("empty stream", 0);
    if (recs_[0].record_type != HEADER) throw StreamError("stream does not begin with HEADER", 0);
    std::size_t i = 1;
    std::vector<Structure> out;
    bool units = false;
    bool ended = false;
    for (; i < recs_.size(); ++i) {
      const auto& r = recs_[i];
      switch (r.record_type) {
        case UNITS:
          expect_type(r, REAL8, 16);
          db_meters_ = decode_real8(be64(r.payload.data() + 8));
          units = true;
          break;
        case BGNSTR:
          if (!units) throw StreamError("structure before UNITS", r.offset);
          out.push_back(parse_structure(i));
          break;
        case ENDLIB:
          ended = true;
          break;
        case HEADER:
          throw StreamError("repeated HEADER", r.offset);
        case BOUNDARY: case PATH: case SREF: case AREF: case TEXT: case NODE: case BOX:
        case ENDSTR: case ENDEL: case XY: case LAYER:
          throw StreamError("element record outside a structure", r.offset);
        default:
          break;  // library-level optional records
      }
      if (ended) break;
    }
    if (!ended) throw StreamError("stream ends without ENDLIB", recs_.back().offset);
    return out;
  }

  double db_meters() const { return db_meters_; }

 private:
  Structure parse_structure(std::size_t& i) {
    Structure s;
    const std::size_t start = recs_[i].offset;
    for (++i; i < recs_.size(); ++i) {
      const auto& r = recs_[i];
      switch (r.record_type) {
        case STRNAME:
          expect_type(r, ASCII);
          s.name = ascii(r);
          break;
        case ENDSTR:
          if (s.name.empty()) throw StreamError("structure without STRNAME", start);
          return s;
        case BOUNDARY: case PATH: case SREF: case AREF:
          s.elements.push_back(parse_element(i));
          break;
        case TEXT: case NODE: case BOX:
          skip_element(i);
          break;
        case STRCLASS:
          break;
        default:
          throw StreamError("unexpected record inside structure", r.offset);
      }
    }
    throw StreamError("structure not closed by ENDSTR", start);
  }

  void skip_element(std::size_t& i) {
    const std::size_t start = recs_[i].offset;
    for (++i; i < recs_.size(); ++i)
      if (recs_[i].record_type == ENDEL) return;
    throw StreamError("element not closed by ENDEL", start);
  }

  Element parse_element(std::size_t& i) {
    Element e;
    e.kind = recs_[i].record_type;
    e.offset = recs_[i].offset;
    int pending_attr = -1;
    for (++i; i < recs_.size(); ++i) {
      const auto& r = recs_[i];
      switch (r.record_type) {
        case ENDEL:
          return e;
        case LAYER:
          expect_type(r, INT16, 2);
          e.layer = static_cast<std::uint16_t>(be16(r.payload.data()));
          break;
        case DATATYPE:
          expect_type(r, INT16, 2);
          e.datatype = static_cast<std::uint16_t>(be16(r.payload.data()));
          break;
        case PATHTYPE:
          expect_type(r, INT16, 2);
          e.pathtype = be16(r.payload.data());
          break;
        case WIDTH:
          expect_type(r, INT32, 4);
          e.width = be32(r.payload.data());
          break;
        case XY: {
          expect_type(r, INT32);
          if (r.payload.size() % 8 != 0) throw StreamError("XY payload not a whole number of points", r.offset);
          for (std::size_t k = 0; k < r.payload.size(); k += 8)
            e.xy.push_back({be32(r.payload.data() + k), be32(r.payload.data() + k + 4)});
          break;
        }
        case SNAME:
          expect_type(r, ASCII);
          e.sname = ascii(r);
          break;
        case STRANS:
          if (r.payload.size() < 2) throw StreamError("STRANS payload too short", r.offset);
          e.reflect = (r.payload[0] & 0x80) != 0;
          if ((r.payload[0] & 0x06) != 0 || (r.payload[1] & 0x06) != 0)
            throw StreamError("absolute magnification/angle flags are not supported", r.offset);
          break;
        case MAG:
          expect_type(r, REAL8, 8);
          e.mag = decode_real8(be64(r.payload.data()));
          break;
        case ANGLE:
          expect_type(r, REAL8, 8);
          e.angle = decode_real8(be64(r.payload.data()));
          break;
        case COLROW:
          expect_type(r, INT16, 4);
          e.cols = be16(r.payload.data());
          e.rows = be16(r.payload.data() + 2);
          break;
        case PROPATTR:
          expect_type(r, INT16, 2);
          pending_attr = be16(r.payload.data());
          break;
        case PROPVALUE:
          if (pending_attr < 0) throw StreamError("PROPVALUE without PROPATTR", r.offset);
          e.props[pending_attr] = ascii(r);
          pending_attr = -1;
          break;
        case ELFLAGS: case PLEX: case BGNEXTN: case ENDEXTN:
          break;
        default:
          throw StreamError("unexpected record inside element", r.offset);
      }
    }
    throw StreamError("element not closed by ENDEL", e.offset);
  }

  const std::vector<GdsRecord>& recs_;
  double db_meters_ = 1e-9;
};

// Integer conversion from database units to nanometers.
struct UnitScale {
  std::int64_t mul = 1, div = 1;

  static UnitScale from_meters(double db_meters, std::size_t offset) {
    const double f = db_meters / 1e-9;
    UnitScale s;
    if (f >= 1.0 && std::abs(f - std::round(f)) < 1e-6) {
      s.mul = std::llround(f);
    } else if (f > 0 && f < 1.0 && std::abs(1.0 / f - std::round(1.0 / f)) < 1e-6) {
      s.div = std::llround(1.0 / f);
    } else {
      throw StreamError("database unit is not an integer multiple or fraction of 1 nm", offset);
    }
    return s;
  }

  Nm operator()(std::int64_t v, std::size_t offset) const {
    if (v % div != 0) throw StreamError("coordinate is not a whole number of nanometers", offset);
    return v / div * mul;
  }
};

Point transform(const Point& p, const Element& ref, const Point& origin) {
  Point q = p;
  if (ref.reflect) q.y = -q.y;
  const long quarter = std::lround(ref.angle / 90.0);
  switch (((quarter % 4) + 4) % 4) {
    case 1: q = {-q.y, q.x}; break;
    case 2: q = {-q.x, -q.y}; break;
    case 3: q = {q.y, -q.x}; break;
    default: break;
  }
  return {q.x + origin.x, q.y + origin.y};
}

struct PendingShape {
  enum class Kind { Segment, Via, Placement } kind;
  WireSegment seg;
  Via via;
  Rect rect;
  std::string name;
  std::string flags;
  std::size_t offset = 0;
};

std::optional<Rect> as_rectangle(const std::vector<Point>& pts) {
  std::vector<Point> v = pts;
  if (v.size() == 5 && v.front() == v.back()) v.pop_back();
  if (v.size() != 4) return std::nullopt;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % 4];
    if (a.x != b.x && a.y != b.y) return std::nullopt;
    if (a == b) return std::nullopt;
  }
  Rect r{v[0].x, v[0].y, v[0].x, v[0].y};
  for (const auto& p : v) r = bounding(r, Rect{p.x, p.y, p.x, p.y});
  for (const auto& p : v)
    if ((p.x != r.xlo && p.x != r.xhi) || (p.y != r.ylo && p.y != r.yhi)) return std::nullopt;
  if (r.width() == 0 || r.height() == 0) return std::nullopt;
  return r;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

Layout read_gds(const std::vector<std::uint8_t>& bytes, const LayerMap& map,
                std::shared_ptr<const TechRules> rules) {
  const auto recs = split_records(bytes);
  StreamParser parser(recs);
  const auto structures = parser.parse();
  const UnitScale scale = UnitScale::from_meters(parser.db_meters(), 0);

  std::map<std::string, const Structure*> by_name;
  std::set<std::string> referenced;
  for (const auto& s : structures) {
    if (!by_name.emplace(s.name, &s).second)
      throw StreamError("duplicate structure '" + s.name + "'", 0);
    for (const auto& e : s.elements)
      if (e.kind == SREF || e.kind == AREF) referenced.insert(e.sname);
  }

  // Flatten: every unreferenced structure is a top; references resolve one level.
  std::vector<std::pair<Element, std::vector<Point>>> flat;  // element + transformed points
  for (const auto& s : structures) {
    if (referenced.count(s.name)) continue;
    for (const auto& e : s.elements) {
      if (e.kind != SREF && e.kind != AREF) {
        flat.emplace_back(e, e.xy);
        continue;
      }
      auto it = by_name.find(e.sname);
      if (it == by_name.end())
        throw StreamError("reference to undefined structure '" + e.sname + "'", e.offset);
      if (std::abs(e.mag - 1.0) > 1e-12) throw StreamError("magnified references are not supported", e.offset);
      if (std::abs(e.angle / 90.0 - std::round(e.angle / 90.0)) > 1e-9)
        throw StreamError("reference rotation is not a multiple of 90 degrees", e.offset);
      std::vector<Point> origins;
      if (e.kind == SREF) {
        if (e.xy.size() != 1) throw StreamError("SREF needs exactly one XY point", e.offset);
        origins.push_back(e.xy[0]);
      } else {
        if (e.xy.size() != 3) throw StreamError("AREF needs exactly three XY points", e.offset);
        if (e.cols < 1 || e.rows < 1) throw StreamError("AREF without a positive COLROW", e.offset);
        if (e.reflect || std::abs(e.angle) > 1e-12)
          throw StreamError("transformed AREF is not supported", e.offset);
        const Point o = e.xy[0];
        const Nm cdx = (e.xy[1].x - o.x), cdy = (e.xy[1].y - o.y);
        const Nm rdx = (e.xy[2].x - o.x), rdy = (e.xy[2].y - o.y);
        if (cdx % e.cols || cdy % e.cols || rdx % e.rows || rdy % e.rows)
          throw StreamError("AREF pitch is not a whole number of database units", e.offset);
        for (int r = 0; r < e.rows; ++r)
          for (int c = 0; c < e.cols; ++c)
            origins.push_back({o.x + c * cdx / e.cols + r * rdx / e.rows,
                               o.y + c * cdy / e.cols + r * rdy / e.rows});
      }
      for (const auto& origin : origins) {
        for (const auto& child : it->second->elements) {
          if (child.kind == SREF || child.kind == AREF)
            throw StreamError("nested reference in '" + e.sname + "' (only one level is flattened)",
                              child.offset);
          std::vector<Point> pts;
          for (const auto& p : child.xy) pts.push_back(transform(p, e, origin));
          flat.emplace_back(child, std::move(pts));
        }
      }
    }
  }

  std::vector<PendingShape> pending;
  std::set<std::pair<int, int>> unmapped;
  for (auto& [e, pts_db] : flat) {
    if (e.layer < 0) throw StreamError("element without LAYER", e.offset);
    auto mit = map.entries.find({e.layer, e.datatype});
    if (mit == map.entries.end()) {
      unmapped.insert({e.layer, e.datatype});
      continue;
    }
    const LayerTarget target = mit->second;
    std::vector<Point> pts;
    for (const auto& p : pts_db) pts.push_back({scale(p.x, e.offset), scale(p.y, e.offset)});
    const std::string name = e.props.count(1) ? e.props.at(1) : "";
    const std::string flags = e.props.count(2) ? e.props.at(2) : "";

    if (e.kind == PATH) {
      if (target.kind != LayerTarget::Kind::Routing)
        throw StreamError("PATH on a non-routing layer", e.offset);
      if (pts.size() < 2) throw StreamError("PATH needs at least two points", e.offset);
      const Nm w = scale(std::abs(e.width), e.offset);
      if (w <= 0) throw StreamError("PATH without positive WIDTH", e.offset);
      if (e.pathtype != 0 && e.pathtype != 2)
        throw StreamError("PATHTYPE " + std::to_string(e.pathtype) + " is not supported", e.offset);
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        Point a = pts[k], b = pts[k + 1];
        if (a == b) throw StreamError("PATH with repeated point", e.offset);
        if (a.x != b.x && a.y != b.y) throw StreamError("PATH edge is not axis-aligned", e.offset);
        if (e.pathtype == 2) {
          const Axis ax = a.y == b.y ? Axis::X : Axis::Y;
          const Nm ext = w / 2;
          const Nm dir = coord(b, ax) > coord(a, ax) ? 1 : -1;
          if (k == 0) (ax == Axis::X ? a.x : a.y) -= dir * ext;
          if (k + 2 == pts.size()) (ax == Axis::X ? b.x : b.y) += dir * ext;
        }
        PendingShape ps{PendingShape::Kind::Segment, {}, {}, {}, name, flags, e.offset};
        ps.seg = WireSegment{"", target.index, a, b, w};
        pending.push_back(std::move(ps));
      }
      continue;
    }
    // BOUNDARY
    const auto rect = as_rectangle(pts);
    if (!rect) throw StreamError("non-rectangular polygon (only axis-aligned rectangles are supported)", e.offset);
    PendingShape ps{PendingShape::Kind::Segment, {}, {}, *rect, name, flags, e.offset};
    switch (target.kind) {
      case LayerTarget::Kind::Routing: {
        const Rect& r = *rect;
        Axis ax;
        if (r.width() != r.height()) ax = r.width() > r.height() ? Axis::X : Axis::Y;
        else ax = run_axis(rules->layer(target.index).direction);
        const Nm w = r.hi(other(ax)) - r.lo(other(ax));
        const Nm c = r.lo(other(ax)) + w / 2;
        ps.seg = WireSegment{"", target.index, make_point(ax, r.lo(ax), c), make_point(ax, r.hi(ax), c), w};
        break;
      }
      case LayerTarget::Kind::Via: {
        ps.kind = PendingShape::Kind::Via;
        const Nm w = rules->layer(target.index).default_width;
        ps.via = Via{"", target.index, {rect->xlo + w / 2, rect->ylo + w / 2}};
        if (rect->width() != w) ps.via.at = {(rect->xlo + rect->xhi) / 2, (rect->ylo + rect->yhi) / 2};
        break;
      }
      case LayerTarget::Kind::Device:
        ps.kind = PendingShape::Kind::Placement;
        break;
    }
    pending.push_back(std::move(ps));
  }
  if (!unmapped.empty()) throw UnmappedLayerError({unmapped.begin(), unmapped.end()});

  // Net identity: explicit names win; unnamed wiring inherits from its
  // connected component or gets a synthesized name.
  const std::size_t n = pending.size();
  UnionFind uf(n);
  {
    ShapeIndex index(*rules);
    std::vector<std::size_t> owner;
    auto add = [&](std::size_t id, int layer, const Rect& r) {
      index.insert(Shape{"", layer, r, ShapeKind::Segment, id});
      owner.push_back(id);
    };
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = pending[i];
      if (p.kind == PendingShape::Kind::Segment) add(i, p.seg.layer, p.seg.rect());
      else if (p.kind == PendingShape::Kind::Via)
        for (int l : {p.via.lower_layer, p.via.lower_layer + 1}) add(i, l, via_pad(*rules, p.via, l));
    }
    for (std::size_t sid = 0; sid < index.size(); ++sid) {
      const Shape& s = index.shape(sid);
      for (std::size_t other_id : index.query(s.layer, s.rect)) {
        const std::size_t a = s.index, b = index.shape(other_id).index;
        if (a == b) continue;
        if (!pending[a].name.empty() && !pending[b].name.empty()) continue;
        uf.unite(a, b);
      }
    }
  }
  std::map<std::size_t, std::string> comp_name;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i].kind == PendingShape::Kind::Placement || pending[i].name.empty()) continue;
    auto& nm = comp_name[uf.find(i)];
    if (nm.empty() || pending[i].name < nm) nm = pending[i].name;
  }
  std::set<std::string> used_names;
  for (const auto& p : pending)
    if (!p.name.empty()) used_names.insert(p.name);
  std::size_t synth = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i].kind == PendingShape::Kind::Placement || !pending[i].name.empty()) continue;
    auto& nm = comp_name[uf.find(i)];
    if (nm.empty()) {
      do nm = "gds_net_" + std::to_string(synth++);
      while (used_names.count(nm));
      used_names.insert(nm);
    }
  }

  Layout layout(rules);
  std::size_t cell_synth = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = pending[i];
    if (p.kind == PendingShape::Kind::Placement) {
      const Rect& r = p.rect;
      if (rules->site_width <= 0 || rules->site_height <= 0)
        throw StreamError("placement found but the technology has no site grid", p.offset);
      if (r.xlo % rules->site_width || r.xhi % rules->site_width || r.ylo % rules->site_height ||
          r.yhi % rules->site_height)
        throw StreamError("device shape is not aligned to the site grid", p.offset);
      Placement pl;
      pl.name = p.name.empty() ? "gds_cell_" + std::to_string(cell_synth++) : p.name;
      pl.col = static_cast<int>(r.xlo / rules->site_width);
      pl.row = static_cast<int>(r.ylo / rules->site_height);
      pl.cols = static_cast<int>(r.width() / rules->site_width);
      pl.rows = static_cast<int>(r.height() / rules->site_height);
      std::istringstream fl(p.flags);
      for (std::string f; fl >> f;) {
        if (f == "locked") pl.locked = true;
        else if (f == "fill") pl.fill = true;
      }
      if (!layout.placements().emplace(pl.name, pl).second)
        throw StreamError("duplicate placement '" + pl.name + "'", p.offset);
      continue;
    }
    const std::string name = p.name.empty() ? comp_name[uf.find(i)] : p.name;
    auto& net = layout.nets()[name];
    std::istringstream fl(p.flags);
    for (std::string f; fl >> f;) {
      if (f == "locked") net.locked = true;
      else if (f == "guard") layout.guard_nets().insert(name);
    }
    if (p.kind == PendingShape::Kind::Segment) {
      p.seg.net = name;
      layout.add_segment(std::move(p.seg));
    } else {
      p.via.net = name;
      layout.add_via(std::move(p.via));
    }
  }
  return layout;
}

// ---------------------------------------------------------------------------
// Writer

namespace {

class StreamWriter {
 public:
  void record(std::uint8_t type, std::uint8_t dtype, const std::vector<std::uint8_t>& payload = {}) {
    const std::size_t len = payload.size() + 4;
    if (len > 0xFFFE) throw Error("gds record exceeds the maximum record length");
    out_.push_back(static_cast<std::uint8_t>(len >> 8));
    out_.push_back(static_cast<std::uint8_t>(len & 0xff));
    out_.push_back(type);
    out_.push_back(dtype);
    out_.insert(out_.end(), payload.begin(), payload.end());
  }
  void int16s(std::uint8_t type, const std::vector<std::int16_t>& v) {
    std::vector<std::uint8_t> p;
    for (auto x : v) {
      p.push_back(static_cast<std::uint8_t>(static_cast<std::uint16_t>(x) >> 8));
      p.push_back(static_cast<std::uint8_t>(x & 0xff));
    }
    record(type, INT16, p);
  }
  void int32s(std::uint8_t type, const std::vector<Nm>& v) {
    std::vector<std::uint8_t> p;
    for (Nm x : v) {
      if (x < INT32_MIN || x > INT32_MAX) throw Error("coordinate exceeds the 32-bit gds range");
      const auto u = static_cast<std::uint32_t>(static_cast<std::int32_t>(x));
      for (int s = 24; s >= 0; s -= 8) p.push_back(static_cast<std::uint8_t>(u >> s));
    }
    record(type, INT32, p);
  }
  void reals(std::uint8_t type, const std::vector<double>& v) {
    std::vector<std::uint8_t> p;
    for (double x : v) {
      const std::uint64_t bits = encode_real8(x);
      for (int s = 56; s >= 0; s -= 8) p.push_back(static_cast<std::uint8_t>(bits >> s));
    }
    record(type, REAL8, p);
  }
  void text(std::uint8_t type, const std::string& s) {
    std::vector<std::uint8_t> p(s.begin(), s.end());
    if (p.size() % 2) p.push_back(0);
    record(type, ASCII, p);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

void write_props(StreamWriter& w, const std::string& name, const std::string& flags) {
  w.int16s(PROPATTR, {1});
  w.text(PROPVALUE, name);
  if (!flags.empty()) {
    w.int16s(PROPATTR, {2});
    w.text(PROPVALUE, flags);
  }
}

void write_boundary(StreamWriter& w, std::pair<int, int> ld, const Rect& r, const std::string& name,
                    const std::string& flags) {
  w.record(BOUNDARY, NO_DATA);
  w.int16s(LAYER, {static_cast<std::int16_t>(ld.first)});
  w.int16s(DATATYPE, {static_cast<std::int16_t>(ld.second)});
  w.int32s(XY, {r.xlo, r.ylo, r.xhi, r.ylo, r.xhi, r.yhi, r.xlo, r.yhi, r.xlo, r.ylo});
  write_props(w, name, flags);
  w.record(ENDEL, NO_DATA);
}

}  // namespace

std::vector<std::uint8_t> write_gds(const Layout& layout, const LayerMap& map) {
  const auto& rules = layout.rules();
  // Fail before emitting anything when a shape has no destination layer.
  for (const auto& [name, n] : layout.nets()) {
    for (const auto& s : n.segments) map.find({LayerTarget::Kind::Routing, s.layer});
    for (const auto& v : n.vias) map.find({LayerTarget::Kind::Via, v.lower_layer});
  }
  if (!layout.placements().empty()) map.find({LayerTarget::Kind::Device, 0});

  StreamWriter w;
  const std::vector<std::int16_t> stamp{2000, 1, 1, 0, 0, 0, 2000, 1, 1, 0, 0, 0};
  w.int16s(HEADER, {600});
  w.int16s(BGNLIB, stamp);
  w.text(LIBNAME, "SHIELDROUTE");
  w.reals(UNITS, {1e-3, 1e-9});
  w.int16s(BGNSTR, stamp);
  w.text(STRNAME, "TOP");

  for (const auto& [name, p] : layout.placements()) {
    std::string flags;
    if (p.locked) flags += "locked";
    if (p.fill) flags += flags.empty() ? "fill" : " fill";
    const Rect r{p.col * rules.site_width, p.row * rules.site_height,
                 (p.col + p.cols) * rules.site_width, (p.row + p.rows) * rules.site_height};
    write_boundary(w, map.find({LayerTarget::Kind::Device, 0}), r, name, flags);
  }
  for (const auto& [name, n] : layout.nets()) {
    std::string flags;
    if (n.locked) flags += "locked";
    if (layout.guard_nets().count(name)) flags += flags.empty() ? "guard" : " guard";
    for (const auto& s : n.segments) {
      const auto ld = map.find({LayerTarget::Kind::Routing, s.layer});
      w.record(PATH, NO_DATA);
      w.int16s(LAYER, {static_cast<std::int16_t>(ld.first)});
      w.int16s(DATATYPE, {static_cast<std::int16_t>(ld.second)});
      w.int16s(PATHTYPE, {0});
      w.int32s(WIDTH, {s.width});
      w.int32s(XY, {s.a.x, s.a.y, s.b.x, s.b.y});
      write_props(w, name, flags);
      w.record(ENDEL, NO_DATA);
    }
    for (const auto& v : n.vias) {
      const auto ld = map.find({LayerTarget::Kind::Via, v.lower_layer});
      write_boundary(w, ld, via_pad(rules, v, v.lower_layer), name, flags);
    }
  }
  w.record(ENDSTR, NO_DATA);
  w.record(ENDLIB, NO_DATA);
  return w.take();
}

}  // namespace shieldroute
