#pragma once

#include <stdexcept>
#include <string>

namespace pmx {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Population spectrum violates its contract (non-ascending, non-positive, empty).
struct InvalidSpectrumError : Error {
    using Error::Error;
};

/// Sample size does not exceed the dimension (K <= N).
struct AspectRatioError : Error {
    using Error::Error;
};

/// Mismatched sizes or a matrix that is not Hermitian within tolerance.
struct ShapeError : Error {
    using Error::Error;
};

/// SCM eigenvalue at or below zero; the inverse spectrum is undefined.
struct SingularScmError : Error {
    using Error::Error;
};

/// Tied sample eigenvalues; downstream formulas divide by their differences.
struct DegenerateSpectrumError : Error {
    using Error::Error;
};

/// Evaluation requested at (or too close to) a pole of the function.
struct PoleError : Error {
    using Error::Error;
};

/// Iterative solver failed to reach its residual target.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, double residual)
        : Error(what), last_residual(residual) {}
    double last_residual = 0.0;
};

/// Contour construction or enclosure-count verification failed.
struct ContourError : Error {
    using Error::Error;
};

/// Malformed configuration or input document.
struct InputError : Error {
    using Error::Error;
};

}  // namespace pmx
