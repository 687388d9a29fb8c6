#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hogtrack {

// Base of every error raised by the library. The CLI maps ConfigError to exit
// status 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or option combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A rectangle or position outside the raster it addresses.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Mismatched vector lengths or raster dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite or out-of-range values.
class DataError : public Error {
 public:
  using Error::Error;
};

// Precondition on the input collection violated (empty record, k > n, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed binary file. Carries the byte offset where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Malformed text file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hogtrack
