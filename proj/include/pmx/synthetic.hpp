#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "pmx/matrix_model.hpp"
#include "pmx/rng.hpp"

namespace pmx {

/// Synthetic SMI spectrum with well-separated eigenvalue groups: adjacent
/// group intervals are separated by a factor >= 2 in scale, and values inside
/// a group keep a minimum spacing. Used to exercise the quadrature oracles on
/// arbitrary instances without sampling a matrix.
struct SyntheticInstance {
    SampleSpectrum sample;
    std::vector<int> mults;
};

inline SyntheticInstance make_synthetic_instance(std::uint64_t seed, int min_n = 8,
                                                 int max_n = 64, int max_groups = 4) {
    SplitMix64 rng(seed);
    const int N = min_n + static_cast<int>(rng.next_u64() % (max_n - min_n + 1));
    const int L = 1 + static_cast<int>(rng.next_u64() % std::min<int>(max_groups, N));

    // Random partition with every part >= 1.
    std::vector<int> mults(L, 1);
    for (int r = 0; r < N - L; ++r) ++mults[rng.next_u64() % L];

    // Descending group intervals [0.9 c_q, 1.1 c_q] with centers a factor
    // in [2.2, 3.2] apart.
    std::vector<double> rho;
    rho.reserve(N);
    double center = 1.0 + rng.next_double();
    std::vector<double> centers(L);
    for (int q = L - 1; q >= 0; --q) {
        centers[q] = center;
        center *= 2.2 + rng.next_double();
    }
    for (int q = 0; q < L; ++q) {
        const double lo = 0.9 * centers[q], hi = 1.1 * centers[q];
        const int n = mults[q];
        for (int j = 0; j < n; ++j) {
            // Jittered equal spacing keeps neighbors at least 0.1/n apart.
            const double t = (j + 0.5 + 0.4 * (2.0 * rng.next_double() - 1.0)) / n;
            rho.push_back(hi - t * (hi - lo));
        }
        std::sort(rho.end() - n, rho.end(), std::greater<double>());
    }

    const double c_K = 0.15 + 0.65 * rng.next_double();
    const int K = std::max(N + 1, static_cast<int>(N / c_K));

    SyntheticInstance inst;
    inst.mults = mults;
    inst.sample.rho_hat = rho;
    inst.sample.sigma_hat.resize(N);
    for (int i = 0; i < N; ++i) inst.sample.sigma_hat[i] = 1.0 / rho[i];
    inst.sample.N = N;
    inst.sample.K = K;
    inst.sample.c_K = static_cast<double>(N) / K;
    return inst;
}

}  // namespace pmx
