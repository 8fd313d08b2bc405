#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pmx/matrix_model.hpp"

namespace pmx {

/// Contiguous index ranges [begin, end) into the descending SMI spectrum,
/// one per distinct precision eigenvalue, ordered with descending gamma.
std::vector<std::pair<int, int>> group_ranges(const std::vector<int>& mults, int N);

/// Consistent estimator of the distinct precision eigenvalues under the
/// proportional-growth regime. For each group,
///   gamma_m = (1/N_m) sum_{k in group} rho_k
///             * (1 - c_K - (c_K/N) sum_{i != k} rho_i / (rho_k - rho_i)),
/// which corrects the plain group mean by the interaction of each sample
/// eigenvalue with the rest of the spectrum. Cost O(N^2).
std::vector<double> estimate_precision_eigs(const SampleSpectrum& sample,
                                            const std::vector<int>& mults);

/// Classical baseline: plain group means of the SMI eigenvalues. Consistent
/// only when K grows much faster than N.
std::vector<double> ml_estimate(const SampleSpectrum& sample,
                                const std::vector<int>& mults);

/// Plug-in estimator of the asymptotic covariance of K (gamma_est - gamma).
/// Off-diagonal:  -(1/(N_m N_n)) sum_{k in m} sum_{l in n} rho_k^2 rho_l^2 / (rho_k - rho_l)^2.
/// Diagonal:       (1/N_m^2) sum_{k in m} sum_{l not in m} (same kernel)
///               + ((K-N)/N_m^2) sum_{k in m} rho_k^2.
Eigen::MatrixXd estimate_clt_covariance(const SampleSpectrum& sample,
                                        const std::vector<int>& mults);

/// Multiplicity-weighted mean of estimated eigenvalues, (1/N) tr(M) plug-in.
double estimate_trace_functional(const std::vector<double>& gamma_est,
                                 const std::vector<int>& mults);

struct EstimationResult {
    std::vector<double> gamma_breve;
    std::optional<Eigen::MatrixXd> theta_hat;
    std::optional<double> g1_hat;
};

}  // namespace pmx
