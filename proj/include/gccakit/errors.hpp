#pragma once

#include <stdexcept>
#include <string>

namespace gccakit {

/// Invalid or inconsistent experiment configuration (bad key, bad value,
/// missing file). Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// File format or filesystem failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (indefinite matrix after jitter, singular system,
/// degenerate eigenvector). Maps to CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gccakit
