#pragma once

#include <stdexcept>
#include <string>

namespace rdmsdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands whose block layout or dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel failed (eigensolver did not converge, CG breakdown).
class NumericalFault : public Error {
 public:
  NumericalFault(const std::string& what, int block = -1)
      : Error(block >= 0 ? what + " (block " + std::to_string(block) + ")" : what),
        block_(block) {}

  int block() const noexcept { return block_; }

 private:
  int block_;
};

/// Malformed input file; line() is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace rdmsdp
