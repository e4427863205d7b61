#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shieldroute {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text-format syntax or semantic error with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(std::string what, std::size_t line, std::size_t column = 1)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Binary stream error located at a byte offset.
class StreamError : public Error {
 public:
  StreamError(std::string what, std::size_t offset)
      : Error("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Technology rule violation, tied to a routing layer.
class RuleError : public Error {
 public:
  RuleError(std::string what, int layer)
      : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}

  int layer() const { return layer_; }

 private:
  int layer_;
};

/// Reference to something that does not exist (layer index, net, guard).
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A planning or attack step that cannot be carried out on the given layout.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace shieldroute
