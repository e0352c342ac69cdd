#pragma once

#include <stdexcept>
#include <string>

namespace epiwave {

/// Bad input: violated precondition, malformed file, inconsistent arguments.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Computation failed: non-convergence, step-size underflow, singular system.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace epiwave
