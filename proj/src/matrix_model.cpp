#include "pmx/matrix_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmx/rng.hpp"

namespace pmx {

int PopulationSpectrum::dimension() const {
    return std::accumulate(mults.begin(), mults.end(), 0);
}

double PopulationSpectrum::trace_functional() const {
    double s = 0.0;
    for (std::size_t i = 0; i < gammas.size(); ++i) s += mults[i] * gammas[i];
    return s / dimension();
}

PopulationSpectrum make_population(const std::vector<double>& lambdas,
                                   const std::vector<int>& mults) {
    if (lambdas.empty() || mults.empty())
        throw InvalidSpectrumError("population spectrum must be non-empty");
    if (lambdas.size() != mults.size())
        throw InvalidSpectrumError("lambdas and mults must have the same length");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0))
            throw InvalidSpectrumError("covariance eigenvalues must be positive");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
            throw InvalidSpectrumError("covariance eigenvalues must be strictly ascending");
        if (mults[i] <= 0)
            throw InvalidSpectrumError("multiplicities must be positive");
    }
    PopulationSpectrum spec;
    spec.lambdas = lambdas;
    spec.mults = mults;
    spec.gammas.resize(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) spec.gammas[i] = 1.0 / lambdas[i];
    return spec;
}

namespace {

// Haar-like unitary: QR of a Gaussian matrix with the R diagonal phase fixed.
Eigen::MatrixXcd random_unitary(int n, std::uint64_t seed) {
    GaussianStream g(seed);
    Eigen::MatrixXcd A(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) A(i, j) = std::complex<double>(g.next(), g.next());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
    Eigen::MatrixXcd Q = qr.householderQ();
    Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        std::complex<double> d = R(j, j);
        double a = std::abs(d);
        Q.col(j) *= (a > 0.0) ? d / a : std::complex<double>(1.0, 0.0);
    }
    return Q;
}

}  // namespace

ObservationMatrix sample_observations(const PopulationSpectrum& spec, int K,
                                      std::uint64_t seed, FieldKind field,
                                      bool rotate) {
    const int N = spec.dimension();
    if (K <= N) throw AspectRatioError("sample size K must exceed dimension N");

    // sqrt(lambda_i) per row, eigenvalues repeated by multiplicity.
    std::vector<double> row_scale(static_cast<std::size_t>(N));
    {
        std::size_t r = 0;
        for (std::size_t i = 0; i < spec.lambdas.size(); ++i) {
            const double s = std::sqrt(spec.lambdas[i]);
            for (int k = 0; k < spec.mults[i]; ++k) row_scale[r++] = s;
        }
    }

    GaussianStream g(seed);
    ObservationMatrix obs;
    obs.field = field;
    obs.entries.resize(N, K);
    // Fill order is column-major; a complex entry consumes one normal pair.
    if (field == FieldKind::Complex) {
        const double scale = 1.0 / std::sqrt(2.0 * K);
        for (int j = 0; j < K; ++j)
            for (int i = 0; i < N; ++i) {
                const double u = g.next();
                const double v = g.next();
                obs.entries(i, j) =
                    std::complex<double>(u * scale * row_scale[i], v * scale * row_scale[i]);
            }
    } else {
        const double scale = 1.0 / std::sqrt(static_cast<double>(K));
        for (int j = 0; j < K; ++j)
            for (int i = 0; i < N; ++i)
                obs.entries(i, j) = std::complex<double>(g.next() * scale * row_scale[i], 0.0);
    }
    if (rotate) {
        const Eigen::MatrixXcd U = random_unitary(N, splitmix64_mix(seed ^ 0x726F746174656421ULL));
        obs.entries = U * obs.entries;
    }
    return obs;
}

Eigen::MatrixXcd sample_covariance(const ObservationMatrix& obs) {
    const Eigen::Index n = obs.entries.rows();
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(n, n);
    R.selfadjointView<Eigen::Lower>().rankUpdate(obs.entries);
    // Mirror the lower triangle so R == R^H exactly.
    Eigen::MatrixXcd full = R.selfadjointView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < n; ++i) full(i, i) = std::complex<double>(full(i, i).real(), 0.0);
    return full;
}

std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& H) {
    if (H.rows() != H.cols()) throw ShapeError("eigensolver input must be square");
    const double norm = H.norm();
    const double dev = (H - H.adjoint()).norm();
    if (dev > 1e-12 * std::max(norm, 1e-300))
        throw ShapeError("matrix is not Hermitian within 1e-12 relative tolerance");
    const Eigen::MatrixXcd sym = 0.5 * (H + H.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw ShapeError("Hermitian eigensolver failed to converge");
    const Eigen::VectorXd ev = solver.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

SampleSpectrum smi_spectrum(const std::vector<double>& scm_eigs, int K) {
    const int N = static_cast<int>(scm_eigs.size());
    if (N == 0) throw ShapeError("empty eigenvalue list");
    if (K <= N) throw AspectRatioError("sample size K must exceed dimension N");
    double maxeig = 0.0;
    for (double s : scm_eigs) maxeig = std::max(maxeig, std::abs(s));
    for (int i = 0; i < N; ++i) {
        if (!(scm_eigs[i] > 0.0))
            throw SingularScmError("SCM eigenvalue <= 0; the K <= N regime is unsupported");
        if (i > 0) {
            if (scm_eigs[i] < scm_eigs[i - 1])
                throw ShapeError("SCM eigenvalues must be sorted ascending");
            if (scm_eigs[i] - scm_eigs[i - 1] <= 1e-12 * maxeig)
                throw DegenerateSpectrumError("tied SCM eigenvalues");
        }
    }
    SampleSpectrum s;
    s.sigma_hat = scm_eigs;
    s.rho_hat.resize(scm_eigs.size());
    for (int i = 0; i < N; ++i) s.rho_hat[i] = 1.0 / scm_eigs[i];
    s.N = N;
    s.K = K;
    s.c_K = static_cast<double>(N) / static_cast<double>(K);
    return s;
}

SampleSpectrum sample_spectrum(const PopulationSpectrum& spec, int K,
                               std::uint64_t seed, FieldKind field) {
    const ObservationMatrix obs = sample_observations(spec, K, seed, field);
    return smi_spectrum(hermitian_eigenvalues(sample_covariance(obs)), K);
}

}  // namespace pmx
