#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dbc {

/// Matrix/vector dimensions do not match an operation's contract.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called out of order (e.g. backward before forward).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value failed validation. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file did not match its on-disk format. Carries the byte offset of the
/// first inconsistency. CLI exit code 3.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// A pipeline stage is missing an upstream artifact. CLI exit code 4.
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Collected demonstrations fail a quality gate.
class DataQualityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dbc
