#pragma once

#include <stdexcept>
#include <string>

namespace seqner {

// Invalid user-supplied configuration (bad probability, bad percentiles, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Contract violation on an operation argument (empty pattern, empty corpus, ...).
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

// Tensor shape incompatibility; message names the op and the offending shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// File / serialization problems (missing file, corrupt checkpoint, ...).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace seqner
