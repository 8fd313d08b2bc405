#pragma once

#include <vector>

#include "pmx/matrix_model.hpp"

namespace fixtures {

// Three separated covariance eigenvalues, light aspect ratio. N must be a
// multiple of 4.
inline pmx::PopulationSpectrum spectrum_a(int N = 24) {
    return pmx::make_population({1.0, 3.0, 7.0}, {N / 2, N / 4, N / 4});
}
constexpr double c_a = 3.0 / 20.0;

// Three close covariance eigenvalues whose clusters merge. N must be a
// multiple of 3.
inline pmx::PopulationSpectrum spectrum_b(int N = 24) {
    return pmx::make_population({1.0, 2.0, 3.0}, {N / 3, N / 3, N / 3});
}
constexpr double c_b = 3.0 / 8.0;

// Two precision eigenvalues (1, 1/5) at dimension 60, sample count 120.
inline pmx::PopulationSpectrum spectrum_c() {
    return pmx::make_population({1.0, 5.0}, {40, 20});
}
constexpr int n_c = 60;
constexpr int k_c = 120;
constexpr double c_c = 0.5;

// Identity covariance.
inline pmx::PopulationSpectrum spectrum_i(int N = 8) {
    return pmx::make_population({1.0}, {N});
}

}  // namespace fixtures
