#include "shieldroute/geometry.hpp"

#include <stdexcept>

namespace shieldroute {

Nm parse_um(std::string_view text) {
  auto fail = [&](const char* why) {
    throw std::invalid_argument(std::string(why) + ": '" + std::string(text) + "'");
  };
  if (text.empty()) fail("empty number");
  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  Nm whole = 0;
  Nm frac = 0;
  int frac_digits = 0;
  bool any_digit = false;
  for (; i < text.size() && text[i] != '.'; ++i) {
    if (text[i] < '0' || text[i] > '9') fail("malformed number");
    whole = whole * 10 + (text[i] - '0');
    if (whole > Nm{1} << 40) fail("number out of range");
    any_digit = true;
  }
  if (i < text.size()) {
    ++i;  // '.'
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') fail("malformed number");
      any_digit = true;
      if (frac_digits < 3) {
        frac = frac * 10 + (text[i] - '0');
        ++frac_digits;
      } else if (text[i] != '0') {
        fail("sub-nanometer precision");
      }
    }
  }
  if (!any_digit) fail("malformed number");
  while (frac_digits < 3) {
    frac *= 10;
    ++frac_digits;
  }
  const Nm v = whole * 1000 + frac;
  return negative ? -v : v;
}

std::string format_um(Nm v) {
  std::string out;
  if (v < 0) {
    out.push_back('-');
    v = -v;
  }
  out += std::to_string(v / 1000);
  out.push_back('.');
  const Nm f = v % 1000;
  out.push_back(static_cast<char>('0' + f / 100));
  out.push_back(static_cast<char>('0' + (f / 10) % 10));
  out.push_back(static_cast<char>('0' + f % 10));
  return out;
}

}  // namespace shieldroute
