#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace stereoscope {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: unknown enum ids, wrong argument ranges.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Bad data: malformed files, schema violations, degenerate datasets.
// Carries the 1-based data row when the problem is row-local.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
  DataError(const std::string& what, std::size_t row)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::optional<std::size_t> row() const { return row_; }

 private:
  std::optional<std::size_t> row_;
};

// Numerical failure such as a singular system.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Transport failure talking to a remote model or LLM provider, after retries.
class NetworkError : public Error {
 public:
  using Error::Error;
};

// The remote side answered, but the answer violates the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace stereoscope
