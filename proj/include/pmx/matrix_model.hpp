#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "pmx/errors.hpp"

namespace pmx {

enum class FieldKind { Complex, Real };

/// Distinct covariance eigenvalues with multiplicities, plus the derived
/// precision-side eigenvalues. lambdas are strictly ascending; gammas = 1/lambda
/// are strictly descending and share the multiplicity at the same index.
struct PopulationSpectrum {
    std::vector<double> lambdas;  // ascending
    std::vector<int> mults;
    std::vector<double> gammas;   // descending, gammas[i] = 1/lambdas[i]

    int num_distinct() const { return static_cast<int>(lambdas.size()); }
    int dimension() const;

    /// Population mean of the precision eigenvalues, (1/N) tr(M).
    double trace_functional() const;
};

PopulationSpectrum make_population(const std::vector<double>& lambdas,
                                   const std::vector<int>& mults);

/// N x K observation matrix, already carrying the 1/sqrt(K) scaling.
struct ObservationMatrix {
    Eigen::MatrixXcd entries;
    FieldKind field = FieldKind::Complex;
};

/// Draw Y = Lambda^{1/2} X with i.i.d. Gaussian X entries of variance 1/K
/// (complex: real and imaginary parts each of variance 1/(2K)).
///
/// The population basis is kept diagonal; `rotate` applies a fixed
/// seed-derived unitary on the left, which exists only so tests can confirm
/// that the spectrum is basis-independent.
ObservationMatrix sample_observations(const PopulationSpectrum& spec, int K,
                                      std::uint64_t seed, FieldKind field,
                                      bool rotate = false);

/// R = Y Y^H, exactly Hermitian by construction.
Eigen::MatrixXcd sample_covariance(const ObservationMatrix& obs);

/// All eigenvalues of a Hermitian matrix, ascending. Rejects inputs whose
/// anti-Hermitian part exceeds 1e-12 of the Frobenius norm.
std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& H);

/// Sorted SCM eigenvalues paired with the inverse (SMI) spectrum.
/// rho_hat[i] = 1/sigma_hat[i]: sigma ascending, rho descending.
struct SampleSpectrum {
    std::vector<double> sigma_hat;  // ascending
    std::vector<double> rho_hat;    // descending
    int N = 0;
    int K = 0;
    double c_K = 0.0;  // N/K
};

SampleSpectrum smi_spectrum(const std::vector<double>& scm_eigs, int K);

/// Convenience pipeline: sample -> SCM -> eigenvalues -> SMI spectrum.
SampleSpectrum sample_spectrum(const PopulationSpectrum& spec, int K,
                               std::uint64_t seed, FieldKind field);

}  // namespace pmx
