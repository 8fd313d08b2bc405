// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Heavy Monte Carlo sections run across all available cores; every trial has
// a deterministic seed, so reruns reproduce the same numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pmx/contour.hpp"
#include "pmx/estimators.hpp"
#include "pmx/matrix_model.hpp"
#include "pmx/montecarlo.hpp"
#include "pmx/rng.hpp"
#include "pmx/stieltjes.hpp"
#include "pmx/synthetic.hpp"

using namespace pmx;

namespace {

int g_failures = 0;

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = fn();
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n", pass ? "PASS" : "FAIL", id,
                name.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct BiasStats {
    std::vector<double> dev;  // mean(gamma_est) - gamma per eigenvalue
    std::vector<double> se;   // Monte Carlo standard error of the mean
    int excluded = 0;
};

BiasStats bias_stats(const PopulationSpectrum& spec, int K, int trials, std::uint64_t seed) {
    const int L = spec.num_distinct();
    std::vector<std::vector<double>> est(trials);
    parallel_for(trials, default_threads(), [&](int t) {
        try {
            const auto s = sample_spectrum(spec, K, mix_seed(seed, t), FieldKind::Complex);
            est[t] = estimate_precision_eigs(s, spec.mults);
        } catch (const DegenerateSpectrumError&) {
        } catch (const SingularScmError&) {
        }
    });
    BiasStats out;
    out.dev.assign(L, 0.0);
    out.se.assign(L, 0.0);
    std::vector<double> mean(L, 0.0), sq(L, 0.0);
    int included = 0;
    for (const auto& g : est) {
        if (g.empty()) {
            ++out.excluded;
            continue;
        }
        ++included;
        for (int i = 0; i < L; ++i) {
            mean[i] += g[i];
            sq[i] += g[i] * g[i];
        }
    }
    for (int i = 0; i < L; ++i) {
        mean[i] /= included;
        const double var = sq[i] / included - mean[i] * mean[i];
        out.dev[i] = mean[i] - spec.gammas[i];
        out.se[i] = std::sqrt(std::max(var, 0.0) / included);
    }
    return out;
}

double row_value(const std::vector<BiasMseRow>& rows, int N, const std::string& est,
                 bool want_bias) {
    for (const auto& r : rows)
        if (r.N == N && r.estimator == est) return want_bias ? r.bias : r.mse;
    throw Error("missing experiment row");
}

}  // namespace

int main() {
    criterion(1, "oracle equivalence, eigenvalue path", []() {
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const auto inst = make_synthetic_instance(mix_seed(0xACC1, t), 8, 64);
            const auto closed = estimate_precision_eigs(inst.sample, inst.mults);
            for (std::size_t m = 0; m < inst.mults.size(); ++m) {
                const auto c = group_contour(inst.sample, inst.mults, static_cast<int>(m), 512);
                const double quad =
                    contour_estimate(inst.sample, inst.mults, static_cast<int>(m), c);
                worst = std::max(worst, std::abs(quad - closed[m]) / std::abs(closed[m]));
            }
        }
        return std::pair(worst <= 1e-8,
                         "max relative deviation " + fmt(worst) + " over 50 instances");
    });

    criterion(2, "oracle equivalence, covariance path", []() {
        double worst = 0.0, worst_i1 = 0.0;
        for (int t = 0; t < 20; ++t) {
            const auto inst = make_synthetic_instance(mix_seed(0xACC2, t), 8, 48);
            const Eigen::MatrixXd closed = estimate_clt_covariance(inst.sample, inst.mults);
            const int L = static_cast<int>(inst.mults.size());
            for (int m = 0; m < L; ++m)
                for (int n = m; n < L; ++n) {
                    const auto [ca, cb] = group_contour_pair(inst.sample, inst.mults, m, n, 256);
                    const auto parts = contour_clt_parts(inst.sample, inst.mults, m, n, ca, cb);
                    worst = std::max(worst, std::abs(parts.theta - closed(m, n)) /
                                                std::abs(closed(m, n)));
                    worst_i1 = std::max(worst_i1, std::abs(parts.i1));
                }
        }
        return std::pair(worst <= 1e-6 && worst_i1 <= 1e-6,
                         "max relative deviation " + fmt(worst) + ", max |I1| " +
                             fmt(worst_i1) + " over 20 instances");
    });

    criterion(3, "trace identity", []() {
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const auto inst = make_synthetic_instance(mix_seed(0xACC3, t), 8, 64);
            const auto g = estimate_precision_eigs(inst.sample, inst.mults);
            double lhs = 0.0;
            for (std::size_t m = 0; m < g.size(); ++m) lhs += inst.mults[m] * g[m];
            const double rhs =
                (1.0 - inst.sample.c_K) *
                std::accumulate(inst.sample.rho_hat.begin(), inst.sample.rho_hat.end(), 0.0);
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
        }
        return std::pair(worst <= 1e-10,
                         "max relative deviation " + fmt(worst) + " over 1000 inputs");
    });

    criterion(4, "consistency sweep, separated population", []() {
        ExperimentConfig cfg;
        cfg.lambdas = {1.0, 3.0, 7.0};
        cfg.mult_fractions = {0.5, 0.25, 0.25};
        cfg.ratio_num = 3;
        cfg.ratio_den = 20;
        cfg.n_grid = {24, 120, 240};
        cfg.trials = 1000;
        cfg.estimators = {"proposed", "ml"};
        cfg.seed = 0xACC4;
        const auto rows = run_bias_mse(cfg);
        const double b24 = row_value(rows, 24, "proposed", true);
        const double b120 = row_value(rows, 120, "proposed", true);
        const double b240 = row_value(rows, 240, "proposed", true);
        const double bml240 = row_value(rows, 240, "ml", true);
        const double m24 = row_value(rows, 24, "proposed", false);
        const double m240 = row_value(rows, 240, "proposed", false);
        const bool decreasing = b24 > b120 && b120 > b240;
        const bool factor5_bias = 5.0 * b240 <= bml240;
        const bool factor5_mse = 5.0 * m240 <= m24;
        std::ostringstream d;
        d << "bias(proposed) " << fmt(b24) << " > " << fmt(b120) << " > " << fmt(b240)
          << "; bias(ml,240) " << fmt(bml240) << "; mse 24->240 " << fmt(m24) << "->"
          << fmt(m240);
        return std::pair(decreasing && factor5_bias && factor5_mse, d.str());
    });

    criterion(5, "non-separable regime", []() {
        ExperimentConfig cfg;
        cfg.lambdas = {1.0, 2.0, 3.0};
        cfg.mult_fractions = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        cfg.ratio_num = 3;
        cfg.ratio_den = 8;
        cfg.n_grid = {240};
        cfg.trials = 1000;
        cfg.estimators = {"proposed", "ml"};
        cfg.seed = 0xACC5;
        const auto rows = run_bias_mse(cfg);
        const double bp = row_value(rows, 240, "proposed", true);
        const double bm = row_value(rows, 240, "ml", true);
        const double mp = row_value(rows, 240, "proposed", false);
        const double mm = row_value(rows, 240, "ml", false);
        std::ostringstream d;
        d << "bias " << fmt(bp) << " vs " << fmt(bm) << "; mse " << fmt(mp) << " vs "
          << fmt(mm);
        return std::pair(bp < bm && mp < mm, d.str());
    });

    criterion(6, "CLT validation", []() {
        ExperimentConfig cfg;
        cfg.lambdas = {1.0, 5.0};
        cfg.mult_fractions = {2.0 / 3, 1.0 / 3};
        cfg.ratio_num = 1;
        cfg.ratio_den = 2;
        cfg.n_grid = {60};
        cfg.trials = 2000;
        cfg.estimators = {"proposed"};
        cfg.seed = 0xACC6;
        const auto r = run_clt_study(cfg);
        bool ok = r.sufficient;
        std::ostringstream d;
        for (std::size_t m = 0; m < r.summary.size(); ++m) {
            const auto& s = r.summary[m];
            ok = ok && std::abs(s.mean) <= 0.1 && s.variance >= 0.85 && s.variance <= 1.15 &&
                 s.ks < 0.05;
            d << "m=" << m + 1 << " mean " << fmt(s.mean) << " var " << fmt(s.variance)
              << " ks " << fmt(s.ks) << (m + 1 < r.summary.size() ? "; " : "");
        }
        return std::pair(ok, d.str());
    });

    criterion(7, "bias order (soft)", []() {
        const auto spec30 = make_population({1.0, 3.0, 7.0},
                                            mults_from_fractions_rounded({0.5, 0.25, 0.25}, 30));
        const auto spec60 = make_population({1.0, 3.0, 7.0},
                                            mults_from_fractions_rounded({0.5, 0.25, 0.25}, 60));
        const int T = 100000;
        const auto s30 = bias_stats(spec30, 200, T, 0xACC7);
        const auto s60 = bias_stats(spec60, 400, T, 0xACC8);
        double sum30 = 0.0, sum60 = 0.0;
        bool all_zero = true;
        for (std::size_t i = 0; i < s30.dev.size(); ++i) {
            sum30 += std::abs(s30.dev[i]);
            sum60 += std::abs(s60.dev[i]);
            all_zero = all_zero && std::abs(s30.dev[i]) <= 3.0 * s30.se[i] &&
                       std::abs(s60.dev[i]) <= 3.0 * s60.se[i];
        }
        const bool halved = sum60 <= 0.5 * sum30;
        std::ostringstream d;
        d << "branch held: "
          << (halved ? "bias halved" : (all_zero ? "indistinguishable from 0 at 3 sigma"
                                                 : "neither"))
          << "; |bias| " << fmt(sum30) << " @(30,200) -> " << fmt(sum60)
          << " @(60,400); 3*SE ~ " << fmt(3.0 * s30.se[0]) << "/" << fmt(3.0 * s60.se[0]);
        return std::pair(halved || all_zero, d.str());
    });

    criterion(8, "exact separation counting", []() {
        const int N = 240, K = 1600, T = 200;
        const auto spec = fixtures::spectrum_a(N);
        const auto rep = support_clusters(spec, fixtures::c_a);
        std::vector<int> padded_ok(T, 0), bare_ok(T, 0);
        parallel_for(T, default_threads(), [&](int t) {
            const auto s = sample_spectrum(spec, K, mix_seed(0xACC9, t), FieldKind::Complex);
            bool ok = true;
            for (int m = 0; m < 3 && ok; ++m) {
                try {
                    build_contour(rep, s, m, 4);
                } catch (const ContourError&) {
                    ok = false;
                }
            }
            padded_ok[t] = ok ? 1 : 0;
            bool bare = true;
            int start = 0;
            for (int m = 0; m < 3; ++m) {
                int count = 0;
                for (double r : s.rho_hat)
                    if (r > rep.clusters[m].prec_lo && r < rep.clusters[m].prec_hi) ++count;
                bare = bare && count == spec.mults[m];
                start += spec.mults[m];
            }
            bare_ok[t] = bare ? 1 : 0;
        });
        const int okc = std::accumulate(padded_ok.begin(), padded_ok.end(), 0);
        const int bare = std::accumulate(bare_ok.begin(), bare_ok.end(), 0);
        std::ostringstream d;
        d << okc << "/" << T << " trials exact (gap-midpoint intervals); " << bare << "/" << T
          << " within the bare limiting intervals";
        return std::pair(okc >= static_cast<int>(0.99 * T), d.str());
    });

    criterion(9, "support duality and closed-form edges", []() {
        double worst = 0.0;
        for (int pick = 0; pick < 2; ++pick) {
            const auto spec = pick == 0 ? fixtures::spectrum_a(24) : fixtures::spectrum_i(8);
            const double c = pick == 0 ? fixtures::c_a : 0.25;
            const auto rep = support_clusters(spec, c);
            for (const auto& cl : rep.clusters) {
                worst = std::max(worst, std::abs(cl.prec_lo * cl.cov_hi - 1.0));
                worst = std::max(worst, std::abs(cl.prec_hi * cl.cov_lo - 1.0));
            }
        }
        const auto rep_i = support_clusters(fixtures::spectrum_i(8), 0.25);
        const double e1 = std::abs(rep_i.clusters[0].cov_lo - 0.25);
        const double e2 = std::abs(rep_i.clusters[0].cov_hi - 2.25);
        std::ostringstream d;
        d << "max duality residual " << fmt(worst) << "; MP edge errors " << fmt(e1) << ", "
          << fmt(e2);
        return std::pair(worst <= 1e-10 && e1 <= 1e-8 && e2 <= 1e-8, d.str());
    });

    criterion(10, "estimator timing", []() {
        ExperimentConfig cfg;
        cfg.lambdas = {1.0, 2.0, 3.0};
        cfg.mult_fractions = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        cfg.ratio_num = 3;
        cfg.ratio_den = 8;
        cfg.n_grid = {30, 120, 300};
        cfg.trials = 20;
        cfg.estimators = {"proposed"};
        cfg.seed = 0xACCA;
        const auto rows = run_timing(cfg);
        double t300 = -1.0, t30 = -1.0, e300 = -1.0;
        for (const auto& r : rows) {
            if (r.N == 300) {
                t300 = r.median_seconds;
                e300 = r.end_to_end_seconds;
            }
            if (r.N == 30) t30 = r.median_seconds;
        }
        std::ostringstream d;
        d << "arithmetic median: N=30 " << fmt(t30) << "s, N=300 " << fmt(t300)
          << "s (end-to-end " << fmt(e300) << "s)"
          << (t300 >= 0.1 ? "; above the 0.1s reference but within the hard 1s limit" : "");
        return std::pair(t300 > 0.0 && t300 < 1.0 && t30 < t300, d.str());
    });

    criterion(11, "fixed-point solver residual, sign, derivative", []() {
        SplitMix64 rng(0xACCB);
        double worst_res = 0.0, worst_fd = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const int pick = t % 3;
            const PopulationSpectrum spec = pick == 0   ? fixtures::spectrum_a(8)
                                            : pick == 1 ? fixtures::spectrum_b(9)
                                                        : fixtures::spectrum_i(8);
            const double c = pick == 0 ? fixtures::c_a : (pick == 1 ? fixtures::c_b : 0.25);
            const double re = -2.0 + 14.0 * rng.next_double();
            const double im = (rng.next_double() < 0.5 ? -1.0 : 1.0) *
                              std::pow(10.0, -3.0 + 3.0 * rng.next_double());
            const cplx z(re, im);
            const auto b = solve_mp_fixed_point(spec, c, z);
            const double N = spec.dimension();
            cplx F = 0.0;
            for (int i = 0; i < spec.num_distinct(); ++i)
                F += (spec.mults[i] / N) /
                     (spec.lambdas[i] * (1.0 - c - c * z * b.value) - z);
            worst_res =
                std::max(worst_res, std::abs(F - b.value) / (1.0 + std::abs(b.value)));
            if (!(b.value.imag() * z.imag() > 0.0))
                return std::pair(false, std::string("Herglotz sign violated"));
            const double h = 1e-6 * std::abs(z);
            const cplx fd = oracles::central_difference(
                [&](cplx w) { return solve_mp_fixed_point(spec, c, w).value; }, z, h);
            worst_fd =
                std::max(worst_fd, std::abs(b.derivative - fd) / std::abs(b.derivative));
        }
        std::ostringstream d;
        d << "max residual " << fmt(worst_res) << ", max derivative deviation " << fmt(worst_fd)
          << " over 1000 points";
        return std::pair(worst_res <= 1e-12 && worst_fd <= 1e-5, d.str());
    });

    if (g_failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
