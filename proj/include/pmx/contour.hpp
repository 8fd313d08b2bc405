#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "pmx/matrix_model.hpp"
#include "pmx/stieltjes.hpp"

namespace pmx {

/// Rectangular integration contour, symmetric about the real axis,
/// positively oriented.
struct ContourSpec {
    double t1 = 0.0;  // left real bound
    double t2 = 0.0;  // right real bound
    double y = 0.0;   // half-height
    int nodes_per_edge = 512;
};

ContourSpec make_contour(double t1, double t2, double y, int nodes_per_edge);

/// Quadrature nodes z with their weight * dz factors, counterclockwise,
/// Gauss-Legendre per edge, in a fixed deterministic order.
std::vector<std::pair<cplx, cplx>> contour_nodes(const ContourSpec& c);

/// Cached Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Plug-in integrand whose contour integral around one eigenvalue cluster
/// recovers the corrected group estimate:
/// ghat(z) = -((1/N) sum z/(rho_i - z)) (1 - c_K + (c_K/N) sum (rho_r/(rho_r - z))^2).
cplx ghat(const SampleSpectrum& sample, cplx z);

/// Empirical companion transform precomposed with inversion, and its
/// z-derivative: value = b_dual(1/z), derivative = d/dz b_dual(1/z).
TransformValue companion_at_inverse(const SampleSpectrum& sample, cplx z);

/// Contour around the m-th limiting precision cluster: bounds at the
/// midpoints of the adjacent spectral gaps (outermost edges padded by half
/// the adjacent gap, floored at 10% of the cluster width), half-height
/// (t2 - t1)/2, margins multiplied by `scale`. Verifies by counting that the
/// contour encloses exactly the cluster's sample eigenvalues.
ContourSpec build_contour(const SupportReport& report, const SampleSpectrum& sample,
                          int m, int nodes_per_edge = 512, double scale = 1.0);

/// Same construction with cluster bounds taken from the sample groups
/// themselves (min/max of each group). Used when no limiting-support report
/// exists, e.g. on synthetic spectra.
ContourSpec group_contour(const SampleSpectrum& sample, const std::vector<int>& mults,
                          int m, int nodes_per_edge = 512, double scale = 1.0);

/// Non-overlapping contour pair for the covariance quadrature: distinct
/// clusters get two midpoint contours at 0.9 margin scale; the same cluster
/// gets concentric rectangles at 0.9 (inner) and 1.1 (outer). Each candidate
/// shape is vetted by a two-resolution quadrature probe, falling back to
/// alternative margin scales and heights when the integrand's spurious poles
/// sit too close to the rectangles.
std::pair<ContourSpec, ContourSpec> group_contour_pair(const SampleSpectrum& sample,
                                                       const std::vector<int>& mults,
                                                       int m, int n,
                                                       int nodes_per_edge = 128);

/// Quadrature evaluation of the group estimate,
/// (N / (N_m 2 pi i)) * contour integral of ghat. The imaginary residue must
/// stay below 1e-8 (1 + |value|); the real part is returned.
double contour_estimate(const SampleSpectrum& sample, const std::vector<int>& mults,
                        int m, const ContourSpec& contour);

/// Same quantity through the residue decomposition of ghat at the enclosed
/// poles: third-order poles contribute
///   rho_k (1 - c_K + (c_K/N) sum_{r != k} (rho_r/(rho_r - rho_k))^2),
/// second-order poles contribute -(c_K/N) rho_k^2 rho_i / (rho_k - rho_i)^2.
double residue_estimate(const SampleSpectrum& sample, const std::vector<int>& mults, int m);

/// Covariance kernel from two companion-at-inverse evaluations:
/// B1 B2 (D1 D2 / (B1 - B2)^2 - 1/(z1 - z2)^2). Symmetric in its arguments.
cplx clt_kernel(const TransformValue& a, const TransformValue& b);

struct CltQuad {
    double theta = 0.0;  // full double integral
    double i1 = 0.0;     // kernel-only sub-integral; identically zero in theory
};

/// Double-contour quadrature of the covariance estimator for entry (m, n),
/// split into the kernel part (i1) and the full value (theta).
CltQuad contour_clt_parts(const SampleSpectrum& sample, const std::vector<int>& mults,
                          int m, int n, const ContourSpec& cm, const ContourSpec& cn);

double contour_clt_covariance(const SampleSpectrum& sample, const std::vector<int>& mults,
                              int m, int n, const ContourSpec& cm, const ContourSpec& cn);

/// Limiting covariance of K (gamma_est - gamma) by double quadrature of the
/// population kernel, using the companion transform from the fixed-point
/// solver on each contour. Requires a separable support report.
Eigen::MatrixXd theoretical_clt_covariance(const PopulationSpectrum& spec, double c,
                                           const SupportReport& report,
                                           int nodes_per_edge = 128);

}  // namespace pmx
