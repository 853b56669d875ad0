#pragma once

#include <stdexcept>
#include <string>

namespace cvsat {

/// Configuration rejected before any physics ran (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Physics-level failure: unphysical state or impossible herald
/// (CLI exit code 4).
struct PhysicsError : std::domain_error {
  explicit PhysicsError(const std::string& what) : std::domain_error(what) {}
};

/// Numeric failure during evaluation, tagged with the offending sweep
/// point when one is known (CLI exit code 3).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cvsat
