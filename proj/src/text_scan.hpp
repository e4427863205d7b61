#pragma once

// Shared tokenizer for the line-oriented text formats (tech, layout, netlist,
// guard plan). Tokens are whitespace separated; '#' starts a comment.

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "shieldroute/error.hpp"
#include "shieldroute/geometry.hpp"

namespace shieldroute::detail {

struct Token {
  std::string_view text;
  std::size_t column = 1;
};

class LineScanner {
 public:
  explicit LineScanner(std::string_view text) : text_(text) {}

  /// Advances to the next non-blank line. Returns false at end of input.
  bool next_line() {
    while (!done_) {
      std::size_t end = text_.find('\n', pos_);
      if (end == std::string_view::npos) {
        end = text_.size();
        done_ = true;
      }
      const std::string_view line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      tokenize(line);
      if (!tokens_.empty()) return true;
    }
    return false;
  }

  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t line() const { return line_no_; }

  [[noreturn]] void fail(const std::string& what, std::size_t token = 0) const {
    const std::size_t col = token < tokens_.size() ? tokens_[token].column : 1;
    throw ParseError(what, line_no_, col);
  }

  std::int64_t integer(std::size_t i) const {
    const auto t = at(i);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) fail("expected an integer", i);
    return v;
  }

  double real(std::size_t i) const {
    const auto t = at(i);
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) fail("expected a number", i);
    return v;
  }

  Nm length(std::size_t i) const {
    try {
      return parse_um(at(i));
    } catch (const std::invalid_argument& e) {
      fail(e.what(), i);
    }
  }

  std::string_view at(std::size_t i) const {
    if (i >= tokens_.size()) fail("missing field " + std::to_string(i + 1));
    return tokens_[i].text;
  }

 private:
  void tokenize(std::string_view line) {
    tokens_.clear();
    std::size_t i = 0;
    while (i < line.size()) {
      const char c = line[i];
      if (c == '#') break;
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' &&
             line[j] != '#')
        ++j;
      tokens_.push_back({line.substr(i, j - i), i + 1});
      i = j;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  bool done_ = false;
  std::vector<Token> tokens_;
};

/// Shortest representation that reads back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace shieldroute::detail
