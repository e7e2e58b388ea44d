#pragma once

#include <stdexcept>

namespace carbex {

// Root-finder / optimiser non-convergence. The CLI maps this to exit code 3,
// as opposed to std::invalid_argument (config/validation, exit 2).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace carbex
