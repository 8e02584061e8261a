#pragma once

#include <stdexcept>
#include <string>

namespace arlp {

/// Bad configuration: unknown keys, out-of-range values, inconsistent options.
/// CLI maps this to exit code 2 (the configuration is an input file).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data (CSV rows, cube files, checkpoints).
/// CLI maps this to exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failure: divergence, degenerate attention targets, gradient-check
/// failures. CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace arlp
