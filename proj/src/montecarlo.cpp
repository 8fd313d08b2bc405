#include "pmx/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pmx {

int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<int> mults_from_fractions_rounded(const std::vector<double>& fractions, int N) {
    if (fractions.empty()) throw InputError("empty multiplicity fractions");
    std::vector<int> mults(fractions.size());
    std::vector<std::pair<double, std::size_t>> rem(fractions.size());
    int total = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double exact = fractions[i] * N;
        mults[i] = static_cast<int>(std::floor(exact + 1e-9));
        rem[i] = {exact - mults[i], i};
        total += mults[i];
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; total < N && j < rem.size(); ++j, ++total) ++mults[rem[j].second];
    if (std::accumulate(mults.begin(), mults.end(), 0) != N)
        throw InputError("multiplicity fractions cannot be rounded to sum N");
    for (int m : mults)
        if (m <= 0) throw InputError("rounded multiplicity is not positive");
    return mults;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.lambdas.empty() || cfg.lambdas.size() != cfg.mult_fractions.size())
        throw InputError("config: lambdas and mult_fractions must be non-empty and matched");
    double frac_sum = 0.0;
    for (double f : cfg.mult_fractions) {
        if (!(f > 0.0)) throw InputError("config: multiplicity fractions must be positive");
        frac_sum += f;
    }
    if (std::abs(frac_sum - 1.0) > 1e-9)
        throw InputError("config: multiplicity fractions must sum to 1");
    if (cfg.ratio_num <= 0 || cfg.ratio_den <= 0 || cfg.ratio_num >= cfg.ratio_den)
        throw InputError("config: n_over_k must be a rational in (0,1)");
    if (cfg.n_grid.empty()) throw InputError("config: empty N grid");
    if (cfg.trials < 1) throw InputError("config: trials must be >= 1");
    if (cfg.estimators.empty()) throw InputError("config: no estimators requested");
    for (const auto& e : cfg.estimators)
        if (e != "proposed" && e != "ml")
            throw InputError("config: unknown estimator '" + e + "'");
    for (int N : cfg.n_grid) {
        sample_size_for(cfg, N);
        mults_for(cfg, N);
    }
}

int sample_size_for(const ExperimentConfig& cfg, int N) {
    const long long num = static_cast<long long>(N) * cfg.ratio_den;
    if (num % cfg.ratio_num != 0)
        throw InputError("config: N is not divisible by the aspect ratio");
    return static_cast<int>(num / cfg.ratio_num);
}

std::vector<int> mults_for(const ExperimentConfig& cfg, int N) {
    std::vector<int> mults(cfg.mult_fractions.size());
    for (std::size_t i = 0; i < mults.size(); ++i) {
        const double exact = cfg.mult_fractions[i] * N;
        const double rounded = std::round(exact);
        if (std::abs(exact - rounded) > 1e-9 || rounded < 1.0)
            throw InputError("config: multiplicity fraction does not give an integer at this N");
        mults[i] = static_cast<int>(rounded);
    }
    if (std::accumulate(mults.begin(), mults.end(), 0) != N)
        throw InputError("config: multiplicities do not sum to N");
    return mults;
}

namespace {

struct TrialResult {
    std::vector<double> gamma;
    bool degenerate = false;
};

// One gamma estimate per trial, slots filled in parallel, read in order.
std::vector<TrialResult> run_estimator_trials(const PopulationSpectrum& spec, int K,
                                              std::uint64_t base, int trials, FieldKind field,
                                              const std::string& estimator, int threads,
                                              const std::vector<int>& mults) {
    std::vector<TrialResult> out(trials);
    parallel_for(trials, threads, [&](int t) {
        try {
            const SampleSpectrum s = sample_spectrum(spec, K, mix_seed(base, t), field);
            out[t].gamma = (estimator == "proposed") ? estimate_precision_eigs(s, mults)
                                                     : ml_estimate(s, mults);
        } catch (const DegenerateSpectrumError&) {
            out[t].degenerate = true;
        } catch (const SingularScmError&) {
            out[t].degenerate = true;
        }
    });
    return out;
}

void check_exclusions(int excluded, int trials) {
    if (excluded * 100 > trials) {
        std::ostringstream msg;
        msg << excluded << " of " << trials << " trials excluded (>1%)";
        throw Error(msg.str());
    }
}

}  // namespace

std::vector<BiasMseRow> run_bias_mse(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
    std::vector<BiasMseRow> rows;
    for (int N : cfg.n_grid) {
        const int K = sample_size_for(cfg, N);
        const auto mults = mults_for(cfg, N);
        const PopulationSpectrum spec = make_population(cfg.lambdas, mults);
        const std::uint64_t base = grid_seed(cfg.seed, N);
        for (const auto& est : cfg.estimators) {
            const auto results =
                run_estimator_trials(spec, K, base, cfg.trials, cfg.field, est, threads, mults);
            const int L = spec.num_distinct();
            std::vector<double> mean(L, 0.0), sq(L, 0.0);
            int included = 0, excluded = 0;
            for (const auto& r : results) {
                if (r.degenerate) {
                    ++excluded;
                    continue;
                }
                ++included;
                for (int i = 0; i < L; ++i) {
                    mean[i] += r.gamma[i];
                    const double d = r.gamma[i] - spec.gammas[i];
                    sq[i] += d * d;
                }
            }
            check_exclusions(excluded, cfg.trials);
            if (included == 0) throw Error("all trials excluded");
            double bias = 0.0, mse = 0.0;
            for (int i = 0; i < L; ++i) {
                bias += std::abs(mean[i] / included - spec.gammas[i]);
                mse += sq[i] / included;
            }
            rows.push_back({N, K, est, bias, mse, excluded});
        }
    }
    return rows;
}

std::vector<G1Row> run_g1_comparison(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
    std::vector<G1Row> rows;
    for (int N : cfg.n_grid) {
        const int K = sample_size_for(cfg, N);
        const auto mults = mults_for(cfg, N);
        const PopulationSpectrum spec = make_population(cfg.lambdas, mults);
        const double g1_true = spec.trace_functional();
        const std::uint64_t base = grid_seed(cfg.seed, N);
        for (const auto& est : cfg.estimators) {
            const auto results =
                run_estimator_trials(spec, K, base, cfg.trials, cfg.field, est, threads, mults);
            double acc = 0.0;
            int included = 0, excluded = 0;
            for (const auto& r : results) {
                if (r.degenerate) {
                    ++excluded;
                    continue;
                }
                ++included;
                const double g1 = estimate_trace_functional(r.gamma, mults);
                acc += (g1 - g1_true) * (g1 - g1_true);
            }
            check_exclusions(excluded, cfg.trials);
            if (included == 0) throw Error("all trials excluded");
            rows.push_back({N, K, est, acc / included, excluded});
        }
    }
    return rows;
}

double ks_statistic_normal(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-values[i] / std::numbers::sqrt2);
        d = std::max(d, std::max(cdf - i / n, (i + 1) / n - cdf));
    }
    return d;
}

CltStudyResult run_clt_study(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
    const int N = cfg.n_grid.front();
    const int K = sample_size_for(cfg, N);
    const auto mults = mults_for(cfg, N);
    const PopulationSpectrum spec = make_population(cfg.lambdas, mults);
    const int L = spec.num_distinct();
    const std::uint64_t base = grid_seed(cfg.seed, N);

    struct Row {
        std::vector<double> s;
        bool degenerate = false;
    };
    std::vector<Row> per_trial(cfg.trials);
    parallel_for(cfg.trials, threads, [&](int t) {
        try {
            const SampleSpectrum s = sample_spectrum(spec, K, mix_seed(base, t), cfg.field);
            const auto gamma = estimate_precision_eigs(s, mults);
            const Eigen::MatrixXd theta = estimate_clt_covariance(s, mults);
            per_trial[t].s.resize(L);
            for (int m = 0; m < L; ++m)
                per_trial[t].s[m] =
                    K * (gamma[m] - spec.gammas[m]) / std::sqrt(theta(m, m));
        } catch (const DegenerateSpectrumError&) {
            per_trial[t].degenerate = true;
        } catch (const SingularScmError&) {
            per_trial[t].degenerate = true;
        }
    });

    CltStudyResult out;
    out.N = N;
    out.K = K;
    std::vector<std::vector<double>> by_m(L);
    for (int t = 0; t < cfg.trials; ++t) {
        if (per_trial[t].degenerate) {
            ++out.excluded;
            continue;
        }
        ++out.included;
        for (int m = 0; m < L; ++m) {
            out.samples.push_back({t, m + 1, per_trial[t].s[m]});
            by_m[m].push_back(per_trial[t].s[m]);
        }
    }
    check_exclusions(out.excluded, cfg.trials);
    out.sufficient = out.included >= 2;
    if (out.sufficient) {
        out.summary.resize(L);
        for (int m = 0; m < L; ++m) {
            const auto& v = by_m[m];
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            var /= (v.size() - 1);
            out.summary[m] = {mean, var, ks_statistic_normal(v)};
        }
    }
    return out;
}

std::vector<TimingRow> run_timing(const ExperimentConfig& cfg) {
    validate_config(cfg);
    using clock = std::chrono::steady_clock;
    const int reps = std::clamp(cfg.trials, 10, 1000);
    std::vector<TimingRow> rows;
    for (int N : cfg.n_grid) {
        const int K = sample_size_for(cfg, N);
        const auto mults = mults_for(cfg, N);
        const PopulationSpectrum spec = make_population(cfg.lambdas, mults);
        const std::uint64_t base = grid_seed(cfg.seed, N);
        for (const auto& est : cfg.estimators) {
            std::vector<double> arith(reps), full(reps);
            for (int r = 0; r < reps; ++r) {
                const auto t0 = clock::now();
                const SampleSpectrum s = sample_spectrum(spec, K, mix_seed(base, r), cfg.field);
                const auto t1 = clock::now();
                volatile double sink = 0.0;
                if (est == "proposed") {
                    const auto gamma = estimate_precision_eigs(s, mults);
                    sink = gamma[0];
                } else {
                    const auto gamma = ml_estimate(s, mults);
                    sink = gamma[0];
                }
                (void)sink;
                const auto t2 = clock::now();
                arith[r] = std::chrono::duration<double>(t2 - t1).count();
                full[r] = std::chrono::duration<double>(t2 - t0).count();
            }
            const auto median = [](std::vector<double> v) {
                std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
                return v[v.size() / 2];
            };
            rows.push_back({N, K, est, median(arith), median(full)});
        }
    }
    return rows;
}

}  // namespace pmx
