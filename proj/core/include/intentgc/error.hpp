#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace intentgc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity produced by (or fed into) a numeric operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line usage. Maps to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

/// Two artifacts were produced from incompatible inputs.
class FingerprintMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace intentgc
