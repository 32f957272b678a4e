#pragma once

#include <stdexcept>
#include <string>

namespace mvgeom {

/// Violated precondition on a numeric or geometric argument.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed file contents (FGRID, PPM, trajectory).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (config files, CLI values, scene specs).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mvgeom
