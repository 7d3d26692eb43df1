#pragma once

#include <stdexcept>
#include <string>

namespace nslab {

/// Invalid configuration or parameter set (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure: CFL violation, positivity loss, non-convergence (exit code 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File read/write failure (exit code 4).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nslab
