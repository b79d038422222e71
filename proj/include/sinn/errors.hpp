#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sinn {

/// Bad caller-supplied data (out-of-range label, non-finite input, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// API misuse: shape mismatch, empty tape, inconsistent lengths.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed file contents. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when training produces a non-finite loss term.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sinn
