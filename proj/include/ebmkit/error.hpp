#pragma once

#include <stdexcept>
#include <string>

namespace ebmkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent column schema, or data that does not match it.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration (training parameters, exclusion rules, synth specs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad input data. Carries the 1-based file line when one is known.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, long line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Unreadable, truncated or wrongly-versioned model file.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

/// A metric that cannot be computed on the given inputs (e.g. one-class labels).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace ebmkit
