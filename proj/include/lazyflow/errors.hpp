#pragma once

#include <stdexcept>
#include <string>

namespace lazyflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when two objects disagree on the size of a named axis.
class DimensionError : public Error {
 public:
  DimensionError(std::string axis, long expected, long actual)
      : Error("dimension mismatch on axis '" + axis + "': expected " + std::to_string(expected) +
              ", got " + std::to_string(actual)),
        axis_(std::move(axis)),
        expected_(expected),
        actual_(actual) {}

  const std::string& axis() const { return axis_; }
  long expected() const { return expected_; }
  long actual() const { return actual_; }

 private:
  std::string axis_;
  long expected_;
  long actual_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems. `path()` is a JSON-pointer-like field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Divergence, non-finite state, eigensolver failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lazyflow
