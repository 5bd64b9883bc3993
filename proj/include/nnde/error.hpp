#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nnde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax-level failure; `offset` is the byte position in the input text.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

/// Numerical domain failure during evaluation (log of a negative value,
/// division by zero, non-finite layer output, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nnde
