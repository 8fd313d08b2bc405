#pragma once

#include <complex>
#include <span>
#include <vector>

#include "pmx/errors.hpp"
#include "pmx/matrix_model.hpp"

namespace pmx {

using cplx = std::complex<double>;

/// A Stieltjes-transform evaluation: b(z) and b'(z) at one point.
struct TransformValue {
    cplx z;
    cplx value;
    cplx derivative;
};

/// Stieltjes transform of the empirical measure of `eigs`:
/// b(z) = (1/N) sum 1/(e_i - z), with derivative (1/N) sum 1/(e_i - z)^2.
TransformValue empirical_stieltjes(std::span<const double> eigs, cplx z);

/// Companion transform of a dual (K x K) Gram spectrum from the primal one:
/// b_dual(z) = c_K * b(z) - (1 - c_K)/z.
cplx dual_stieltjes(cplx b_scm, double c_K, cplx z);

/// Limiting Stieltjes transform of the SCM spectrum: the Herglotz solution of
/// the Marchenko-Pastur equation
///   b = (1/N) sum_i N_i / (lambda_i (1 - c - c z b) - z).
/// Damped fixed-point iteration (alpha = 0.5, b0 = -1/z) with a Newton polish;
/// the derivative comes from implicit differentiation. Residual target 1e-12.
TransformValue solve_mp_fixed_point(const PopulationSpectrum& spec, double c, cplx z);

/// Limiting Stieltjes transform of the inverse-SCM spectrum, derived from the
/// covariance-side solution through the companion transform at 1/z.
TransformValue solve_mp_precision(const PopulationSpectrum& spec, double c, cplx z);

/// Companion (dual Gram) limit transform and its derivative at w:
/// u(w) = c b_K(w) - (1-c)/w,  u'(w) = c b_K'(w) + (1-c)/w^2.
TransformValue limiting_dual_transform(const PopulationSpectrum& spec, double c, cplx w);

/// Covariance-side cluster-separation indicator:
/// Psi(f) = 1 - (c/N) sum_i N_i (lambda_i/(lambda_i - f))^2.
double psi(const PopulationSpectrum& spec, double c, double f);
double psi_prime(const PopulationSpectrum& spec, double c, double f);

/// Precision-side cluster-separation indicator:
/// xi(w) = 1 - (c/N) sum_i N_i (w/(gamma_i - w))^2.  Psi(f) == xi(1/f).
double xi(const PopulationSpectrum& spec, double c, double w);
double xi_prime(const PopulationSpectrum& spec, double c, double w);

/// One connected component of the limiting support, on both spectral sides.
/// Cluster index 0 corresponds to the largest precision eigenvalue gamma_1
/// (equivalently, the smallest covariance eigenvalue lambda_1).
struct SupportCluster {
    double omega_lo = 0.0, omega_hi = 0.0;  // root pair of xi bracketing the gammas
    double prec_lo = 0.0, prec_hi = 0.0;    // precision support edges
    double cov_lo = 0.0, cov_hi = 0.0;      // covariance support edges (reciprocal)
    std::vector<int> members;               // population indices assigned here
    bool merged = false;                    // more than one distinct eigenvalue
};

struct SupportReport {
    double c = 0.0;
    int L = 0;
    int Q = 0;                               // number of connected components
    std::vector<double> gammas;              // copy of the population, descending
    std::vector<int> mults;
    std::vector<double> f_crit;              // roots of Psi', ascending (L-1)
    std::vector<double> omega_bar;           // roots of xi', descending (L-1)
    std::vector<double> phi;                 // per-eigenvalue separation margin (L)
    std::vector<bool> cluster_separable;     // phi[m] > 0
    bool separable = false;                  // all margins positive
    std::vector<SupportCluster> clusters;    // descending in omega; size Q
    std::vector<int> gamma_to_cluster;       // population index -> cluster index
    std::vector<double> eta;                 // poles of the omega -> z map, descending (L)

    /// Multiplicity mass assigned to cluster q.
    int cluster_count(int q) const;
};

/// Separation diagnostics only: critical points of Psi and the per-eigenvalue
/// margins phi. Cluster edges are left empty.
SupportReport separability(const PopulationSpectrum& spec, double c);

/// Full support characterization: xi root pairs, precision edges through the
/// omega -> z map, covariance edges by reciprocity, merged-cluster assignment.
SupportReport support_clusters(const PopulationSpectrum& spec, double c);

}  // namespace pmx
