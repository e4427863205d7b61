#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shieldroute/error.hpp"
#include "shieldroute/layout.hpp"

namespace shieldroute {

namespace gds {

enum RecordType : std::uint8_t {
  HEADER = 0x00, BGNLIB = 0x01, LIBNAME = 0x02, UNITS = 0x03, ENDLIB = 0x04,
  BGNSTR = 0x05, STRNAME = 0x06, ENDSTR = 0x07, BOUNDARY = 0x08, PATH = 0x09,
  SREF = 0x0A, AREF = 0x0B, TEXT = 0x0C, LAYER = 0x0D, DATATYPE = 0x0E,
  WIDTH = 0x0F, XY = 0x10, ENDEL = 0x11, SNAME = 0x12, COLROW = 0x13,
  NODE = 0x15, TEXTTYPE = 0x16, PRESENTATION = 0x17, STRING = 0x19,
  STRANS = 0x1A, MAG = 0x1B, ANGLE = 0x1C, REFLIBS = 0x1F, FONTS = 0x20,
  PATHTYPE = 0x21, GENERATIONS = 0x22, ATTRTABLE = 0x23, ELFLAGS = 0x26,
  NODETYPE = 0x2A, PROPATTR = 0x2B, PROPVALUE = 0x2C, BOX = 0x2D, BOXTYPE = 0x2E,
  PLEX = 0x2F, BGNEXTN = 0x30, ENDEXTN = 0x31, STRCLASS = 0x34, FORMAT = 0x36,
  MASK = 0x37, ENDMASKS = 0x38, LIBDIRSIZE = 0x39, SRFNAME = 0x3A, LIBSECUR = 0x3B,
};

enum DataType : std::uint8_t {
  NO_DATA = 0, BIT_ARRAY = 1, INT16 = 2, INT32 = 3, REAL4 = 4, REAL8 = 5, ASCII = 6,
};

/// Excess-64 base-16 eight-byte real, returned as its big-endian bit pattern.
std::uint64_t encode_real8(double v);
double decode_real8(std::uint64_t bits);

}  // namespace gds

struct GdsRecord {
  std::uint16_t length = 0;  // total bytes including the 4-byte header
  std::uint8_t record_type = 0;
  std::uint8_t data_type = 0;
  std::vector<std::uint8_t> payload;
  std::size_t offset = 0;  // byte position of the header in the stream
};

/// Splits a stream into records. Throws StreamError on truncation, odd or
/// undersized lengths, and unknown record codes.
std::vector<GdsRecord> split_records(const std::vector<std::uint8_t>& bytes);

/// Where a (gds layer, datatype) pair lands in the layout model.
struct LayerTarget {
  enum class Kind : std::uint8_t { Routing, Via, Device };
  Kind kind = Kind::Routing;
  int index = 0;  // routing layer, or lower routing layer of a via; 0 for Device

  friend bool operator==(const LayerTarget&, const LayerTarget&) = default;
  friend auto operator<=>(const LayerTarget&, const LayerTarget&) = default;
};

struct LayerMap {
  std::map<std::pair<int, int>, LayerTarget> entries;

  /// Reverse lookup used by the writer. Throws LookupError when unmapped.
  std::pair<int, int> find(const LayerTarget& t) const;
};

/// Parses `<gds_layer> <gds_datatype> <layer_name>` lines. Names are routing
/// layer names from `rules`, `VIA<k>` for the cut above layer k, or `DEVICE`.
LayerMap parse_layer_map(std::string_view text, const TechRules& rules);
std::string serialize_layer_map(const LayerMap& map, const TechRules& rules);

/// Routing layer k on (k, 0), cut k on (100 + k, 0), device on (0, 0).
LayerMap default_layer_map(const TechRules& rules);

/// Raised when elements sit on layers the map does not cover. Lists every
/// offending pair, not only the first.
class UnmappedLayerError : public Error {
 public:
  explicit UnmappedLayerError(std::vector<std::pair<int, int>> pairs);
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

Layout read_gds(const std::vector<std::uint8_t>& bytes, const LayerMap& map,
                std::shared_ptr<const TechRules> rules);

/// Deterministic stream: fixed timestamps, library "SHIELDROUTE", one
/// structure "TOP". Net names and flags travel as element properties
/// (attribute 1 = name, 2 = flags).
std::vector<std::uint8_t> write_gds(const Layout& layout, const LayerMap& map);

}  // namespace shieldroute
