#include "pmx/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmx {

std::vector<std::pair<int, int>> group_ranges(const std::vector<int>& mults, int N) {
    if (mults.empty()) throw ShapeError("multiplicity list must be non-empty");
    int total = 0;
    std::vector<std::pair<int, int>> ranges;
    ranges.reserve(mults.size());
    for (int m : mults) {
        if (m <= 0) throw ShapeError("multiplicities must be positive");
        ranges.emplace_back(total, total + m);
        total += m;
    }
    if (total != N) throw ShapeError("multiplicities must sum to the dimension N");
    return ranges;
}

namespace {

// Order-agnostic: group membership, not list position, drives the formulas.
void check_no_ties(std::vector<double> rho) {
    std::sort(rho.begin(), rho.end(), std::greater<double>());
    const double scale = std::abs(rho.front());
    for (std::size_t i = 1; i < rho.size(); ++i)
        if (rho[i - 1] - rho[i] <= 1e-12 * scale)
            throw DegenerateSpectrumError("tied SMI eigenvalues");
}

}  // namespace

std::vector<double> estimate_precision_eigs(const SampleSpectrum& sample,
                                            const std::vector<int>& mults) {
    const auto& rho = sample.rho_hat;
    const int N = sample.N;
    const auto ranges = group_ranges(mults, N);
    check_no_ties(rho);
    const double cK = sample.c_K;

    std::vector<double> out(mults.size());
    for (std::size_t m = 0; m < ranges.size(); ++m) {
        const auto [lo, hi] = ranges[m];
        double acc = 0.0;
        for (int k = lo; k < hi; ++k) {
            double cross = 0.0;
            for (int i = 0; i < N; ++i) {
                if (i == k) continue;
                cross += rho[i] / (rho[k] - rho[i]);
            }
            acc += rho[k] * (1.0 - cK - (cK / N) * cross);
        }
        out[m] = acc / mults[m];
    }
    return out;
}

std::vector<double> ml_estimate(const SampleSpectrum& sample,
                                const std::vector<int>& mults) {
    const auto ranges = group_ranges(mults, sample.N);
    std::vector<double> out(mults.size());
    for (std::size_t m = 0; m < ranges.size(); ++m) {
        const auto [lo, hi] = ranges[m];
        double acc = 0.0;
        for (int k = lo; k < hi; ++k) acc += sample.rho_hat[k];
        out[m] = acc / mults[m];
    }
    return out;
}

Eigen::MatrixXd estimate_clt_covariance(const SampleSpectrum& sample,
                                        const std::vector<int>& mults) {
    const auto& rho = sample.rho_hat;
    const int N = sample.N;
    const int K = sample.K;
    if (K <= N) throw AspectRatioError("CLT covariance requires K > N");
    const auto ranges = group_ranges(mults, N);
    check_no_ties(rho);
    const int L = static_cast<int>(mults.size());

    // Off-diagonal blocks of the pair kernel; the diagonal's complement sum is
    // recovered from the same accumulation, keeping the whole matrix O(N^2).
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(L, L);
    for (int m = 0; m < L; ++m) {
        for (int n = m + 1; n < L; ++n) {
            double s = 0.0;
            for (int k = ranges[m].first; k < ranges[m].second; ++k)
                for (int l = ranges[n].first; l < ranges[n].second; ++l) {
                    const double d = rho[k] - rho[l];
                    s += rho[k] * rho[k] * rho[l] * rho[l] / (d * d);
                }
            S(m, n) = s;
            S(n, m) = s;
        }
    }

    Eigen::MatrixXd theta(L, L);
    for (int m = 0; m < L; ++m) {
        const double Nm = mults[m];
        double sq = 0.0;
        for (int k = ranges[m].first; k < ranges[m].second; ++k) sq += rho[k] * rho[k];
        double complement = 0.0;
        for (int n = 0; n < L; ++n)
            if (n != m) complement += S(m, n);
        theta(m, m) = complement / (Nm * Nm) + (K - N) * sq / (Nm * Nm);
        for (int n = 0; n < L; ++n)
            if (n != m) theta(m, n) = -S(m, n) / (Nm * mults[n]);
    }
    return theta;
}

double estimate_trace_functional(const std::vector<double>& gamma_est,
                                 const std::vector<int>& mults) {
    if (gamma_est.size() != mults.size() || gamma_est.empty())
        throw ShapeError("estimate and multiplicity lists must match");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < gamma_est.size(); ++i) {
        num += mults[i] * gamma_est[i];
        den += mults[i];
    }
    return num / den;
}

}  // namespace pmx
