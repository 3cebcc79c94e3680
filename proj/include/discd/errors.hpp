#pragma once

#include <stdexcept>
#include <string>

namespace discd {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text. Carries a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(msg + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Structurally valid input that violates a semantic contract
// (bad signature, invalid dataset, out-of-range parameter, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Evidence or aggregated knowledge with zero models. Probabilities
// conditioned on it are undefined, so this is never repaired silently.
class InconsistencyError : public DataError {
 public:
  using DataError::DataError;
};

// A configured limit (node budget, cache, tree size) was exceeded.
// The operation failed explicitly rather than returning a wrong value.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

// Missing or unusable external configuration (e.g. external counter tool).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace discd
