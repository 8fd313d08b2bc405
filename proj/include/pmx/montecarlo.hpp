#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "pmx/estimators.hpp"
#include "pmx/matrix_model.hpp"
#include "pmx/rng.hpp"

namespace pmx {

/// Experiment description. Multiplicities are given as fractions of N so one
/// config spans a whole N grid; every N in the grid must make the fractions
/// and the aspect ratio exactly integral.
struct ExperimentConfig {
    std::vector<double> lambdas;
    std::vector<double> mult_fractions;
    int ratio_num = 0;  // N/K = ratio_num / ratio_den
    int ratio_den = 0;
    std::vector<int> n_grid;
    int trials = 0;
    std::vector<std::string> estimators;  // "proposed", "ml"
    std::uint64_t seed = 0;
    FieldKind field = FieldKind::Complex;
    std::vector<std::string> outputs;  // "bias", "mse", "g1", "clt", "timing"
    int threads = 0;                   // 0 = hardware concurrency
};

void validate_config(const ExperimentConfig& cfg);
int sample_size_for(const ExperimentConfig& cfg, int N);
std::vector<int> mults_for(const ExperimentConfig& cfg, int N);

/// Largest-remainder rounding of fractional multiplicities to integers
/// summing to N (ties broken toward lower index).
std::vector<int> mults_from_fractions_rounded(const std::vector<double>& fractions, int N);

/// Base seed for one grid point; trial t then uses mix_seed(base, t).
inline std::uint64_t grid_seed(std::uint64_t base_seed, int N) {
    return splitmix64_mix(base_seed + static_cast<std::uint64_t>(N));
}

int default_threads();

/// Run fn(i) for i in [0, n) across `threads` workers. Work items are
/// independent; callers aggregate their own output slots in index order, so
/// results do not depend on scheduling.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(threads, n);
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

struct BiasMseRow {
    int N = 0, K = 0;
    std::string estimator;
    double bias = 0.0, mse = 0.0;
    int excluded = 0;
};

struct G1Row {
    int N = 0, K = 0;
    std::string estimator;
    double g1_mse = 0.0;
    int excluded = 0;
};

struct CltSample {
    int trial = 0;
    int m = 0;  // 1-based eigenvalue index
    double s = 0.0;
};

struct CltSummary {
    double mean = 0.0;
    double variance = 0.0;
    double ks = 0.0;
};

struct CltStudyResult {
    int N = 0, K = 0;
    int included = 0, excluded = 0;
    bool sufficient = false;
    std::vector<CltSample> samples;
    std::vector<CltSummary> summary;  // per eigenvalue when sufficient
};

struct TimingRow {
    int N = 0, K = 0;
    std::string estimator;
    double median_seconds = 0.0;
    double end_to_end_seconds = 0.0;
};

/// Bias and MSE across the N grid:
/// bias = sum_i |mean_k gamma_i^(k) - gamma_i|,
/// mse  = sum_i (1/T) sum_k (gamma_i^(k) - gamma_i)^2.
/// Trials hitting a degenerate spectrum are excluded and counted; more than
/// 1% exclusions aborts the run.
std::vector<BiasMseRow> run_bias_mse(const ExperimentConfig& cfg);

/// Mean squared error of the plug-in trace functional (1/N) tr(M).
std::vector<G1Row> run_g1_comparison(const ExperimentConfig& cfg);

/// Standardized deviations s_m = K (gamma_m_est - gamma_m) / sqrt(theta_mm)
/// per trial, with mean/variance and a Kolmogorov-Smirnov statistic against
/// the standard normal. Runs at the first grid point.
CltStudyResult run_clt_study(const ExperimentConfig& cfg);

/// Median wall-clock of the estimator arithmetic alone, plus the end-to-end
/// time (sampling through estimation), per grid point and estimator.
std::vector<TimingRow> run_timing(const ExperimentConfig& cfg);

/// Two-sided KS distance between the empirical law of `sorted_ascending`
/// and the standard normal.
double ks_statistic_normal(std::vector<double> values);

}  // namespace pmx
