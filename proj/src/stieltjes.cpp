#include "pmx/stieltjes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pmx {

namespace {

constexpr double kPoleGuard = 1e-13;

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

void check_aspect(double c) {
    if (!(c > 0.0 && c < 1.0)) throw AspectRatioError("aspect ratio c must lie in (0,1)");
}

}  // namespace

TransformValue empirical_stieltjes(std::span<const double> eigs, cplx z) {
    if (eigs.empty()) throw ShapeError("empty eigenvalue list");
    const double n = static_cast<double>(eigs.size());
    cplx v = 0.0, d = 0.0;
    for (double e : eigs) {
        const cplx den = e - z;
        if (std::abs(den) < 1e-14 * std::max(1.0, std::abs(e)))
            throw PoleError("evaluation point coincides with an eigenvalue");
        const cplx inv = 1.0 / den;
        v += inv;
        d += inv * inv;
    }
    return {z, v / n, d / n};
}

cplx dual_stieltjes(cplx b_scm, double c_K, cplx z) {
    if (std::abs(z) == 0.0) throw PoleError("dual transform undefined at z = 0");
    return c_K * b_scm - (1.0 - c_K) / z;
}

TransformValue solve_mp_fixed_point(const PopulationSpectrum& spec, double c, cplx z) {
    check_aspect(c);
    if (z.imag() == 0.0) throw PoleError("fixed point requires Im(z) != 0");
    const double N = spec.dimension();
    const std::size_t L = spec.lambdas.size();

    // F(b) together with dF/db.
    const auto eval = [&](cplx b) {
        cplx F = 0.0, Fb = 0.0;
        const cplx base = 1.0 - c - c * z * b;
        for (std::size_t i = 0; i < L; ++i) {
            const double w = spec.mults[i] / N;
            const cplx Di = spec.lambdas[i] * base - z;
            const cplx inv = 1.0 / Di;
            F += w * inv;
            Fb += w * spec.lambdas[i] * inv * inv;
        }
        Fb *= c * z;
        return std::pair<cplx, cplx>(F, Fb);
    };

    const int cap = 10000;
    const double tol = 1e-12;
    cplx b = -1.0 / z;
    cplx best_b = b;
    double best_res = std::numeric_limits<double>::infinity();
    bool converged = false;
    int it = 0;

    // Damped phase: globally attracting but only linearly convergent, with the
    // contraction factor degrading to 1 - O(Im z) near the support.
    for (; it < cap; ++it) {
        const auto [F, Fb] = eval(b);
        (void)Fb;
        const double res = std::abs(F - b);
        if (res < best_res && finite(F)) {
            best_res = res;
            best_b = b;
        }
        if (res <= tol * (1.0 + std::abs(b))) {
            converged = true;
            break;
        }
        if (res <= 1e-2 * (1.0 + std::abs(b)) && it >= 32) break;
        b = 0.5 * b + 0.5 * F;
        if (!finite(b)) {
            b = best_b;
            break;
        }
    }

    // Newton polish on G(b) = F(b) - b; quadratic once inside the basin.
    if (!converged) {
        cplx bn = best_b;
        for (int k = 0; k < 100; ++k) {
            const auto [F, Fb] = eval(bn);
            const double res = std::abs(F - bn);
            if (res < best_res && finite(bn)) {
                best_res = res;
                best_b = bn;
            }
            if (res <= tol * (1.0 + std::abs(bn))) {
                converged = true;
                break;
            }
            const cplx denom = Fb - 1.0;
            if (std::abs(denom) < 1e-300) break;
            bn = bn - (F - bn) / denom;
            if (!finite(bn)) break;
        }
        if (!converged) {
            // Fall back to the damped map from the best iterate seen so far.
            cplx bd = best_b;
            for (; it < cap; ++it) {
                const auto [F, Fb] = eval(bd);
                (void)Fb;
                const double res = std::abs(F - bd);
                if (res < best_res && finite(F)) {
                    best_res = res;
                    best_b = bd;
                }
                if (res <= tol * (1.0 + std::abs(bd))) {
                    converged = true;
                    break;
                }
                bd = 0.5 * bd + 0.5 * F;
                if (!finite(bd)) break;
            }
        }
    }

    b = best_b;
    const auto [F, Fb] = eval(b);
    const double res = std::abs(F - b);
    if (!converged || !(res <= tol * (1.0 + std::abs(b))))
        throw ConvergenceError("Marchenko-Pastur fixed point did not converge", res);
    if (!(b.imag() * z.imag() > 0.0))
        throw ConvergenceError("fixed point violates the Herglotz sign", res);

    // Implicit differentiation: b' (1 - (cz/N) sum N_i lambda_i / D_i^2)
    //                           = (1/N) sum N_i (lambda_i c b + 1) / D_i^2.
    cplx num = 0.0, den_sum = 0.0;
    const cplx base = 1.0 - c - c * z * b;
    for (std::size_t i = 0; i < L; ++i) {
        const double w = spec.mults[i] / N;
        const cplx Di = spec.lambdas[i] * base - z;
        const cplx inv2 = 1.0 / (Di * Di);
        num += w * (spec.lambdas[i] * c * b + 1.0) * inv2;
        den_sum += w * spec.lambdas[i] * inv2;
    }
    const cplx bprime = num / (1.0 - c * z * den_sum);
    return {z, b, bprime};
}

TransformValue limiting_dual_transform(const PopulationSpectrum& spec, double c, cplx w) {
    if (std::abs(w) == 0.0) throw PoleError("dual transform undefined at w = 0");
    const TransformValue bk = solve_mp_fixed_point(spec, c, w);
    TransformValue u;
    u.z = w;
    u.value = c * bk.value - (1.0 - c) / w;
    u.derivative = c * bk.derivative + (1.0 - c) / (w * w);
    return u;
}

TransformValue solve_mp_precision(const PopulationSpectrum& spec, double c, cplx z) {
    check_aspect(c);
    if (z.imag() == 0.0 || std::abs(z) == 0.0)
        throw PoleError("precision transform requires Im(z) != 0 and z != 0");
    const cplx w = 1.0 / z;
    const TransformValue u = limiting_dual_transform(spec, c, w);

    TransformValue bt;
    bt.z = z;
    bt.value = -(w / c) * (w * u.value + 1.0);
    bt.derivative = (u.derivative + 2.0 * z * u.value + z * z) / (c * z * z * z * z);

    // The precision-side fixed point must hold at the derived value.
    const double N = spec.dimension();
    const cplx load = 1.0 + z * c * bt.value;
    cplx rhs = 0.0;
    for (std::size_t i = 0; i < spec.gammas.size(); ++i)
        rhs += (spec.mults[i] / N) * load / (spec.gammas[i] - z * load);
    const double res = std::abs(bt.value - rhs);
    if (!(res <= 1e-10 * (1.0 + std::abs(bt.value))))
        throw ConvergenceError("precision-side transform residual too large", res);
    if (!(bt.value.imag() * z.imag() > 0.0))
        throw ConvergenceError("precision-side transform violates the Herglotz sign", res);
    return bt;
}

double psi(const PopulationSpectrum& spec, double c, double f) {
    const double N = spec.dimension();
    double s = 0.0;
    for (std::size_t i = 0; i < spec.lambdas.size(); ++i) {
        const double den = spec.lambdas[i] - f;
        if (std::abs(den) < kPoleGuard * std::max(1.0, spec.lambdas[i]))
            throw PoleError("Psi evaluated at a population eigenvalue");
        const double r = spec.lambdas[i] / den;
        s += spec.mults[i] * r * r;
    }
    return 1.0 - (c / N) * s;
}

double psi_prime(const PopulationSpectrum& spec, double c, double f) {
    const double N = spec.dimension();
    double s = 0.0;
    for (std::size_t i = 0; i < spec.lambdas.size(); ++i) {
        const double den = spec.lambdas[i] - f;
        if (std::abs(den) < kPoleGuard * std::max(1.0, spec.lambdas[i]))
            throw PoleError("Psi' evaluated at a population eigenvalue");
        s += spec.mults[i] * spec.lambdas[i] * spec.lambdas[i] / (den * den * den);
    }
    return -(2.0 * c / N) * s;
}

double xi(const PopulationSpectrum& spec, double c, double w) {
    const double N = spec.dimension();
    double s = 0.0;
    for (std::size_t i = 0; i < spec.gammas.size(); ++i) {
        const double den = spec.gammas[i] - w;
        if (std::abs(den) < kPoleGuard * std::max(1.0, spec.gammas[i]))
            throw PoleError("xi evaluated at a population eigenvalue");
        const double r = w / den;
        s += spec.mults[i] * r * r;
    }
    return 1.0 - (c / N) * s;
}

double xi_prime(const PopulationSpectrum& spec, double c, double w) {
    const double N = spec.dimension();
    double s = 0.0;
    for (std::size_t i = 0; i < spec.gammas.size(); ++i) {
        const double den = spec.gammas[i] - w;
        if (std::abs(den) < kPoleGuard * std::max(1.0, spec.gammas[i]))
            throw PoleError("xi' evaluated at a population eigenvalue");
        s += spec.mults[i] * spec.gammas[i] * w / (den * den * den);
    }
    return -(2.0 * c / N) * s;
}

namespace {

// Bisection refinement of a bracketed simple root to 1e-13 absolute.
template <typename Fn>
double bisect(Fn&& fn, double lo, double hi, double flo) {
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = fn(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Sign changes of fn on a log-spaced probe grid over (lo, hi), refined by
// bisection. All roots interlace with poles of the rational functions here,
// so a dense probe grid catches every one.
template <typename Fn>
std::vector<double> roots_on_interval(Fn&& fn, double lo, double hi, int n_probe = 1024) {
    std::vector<double> roots;
    if (!(hi > lo) || !(lo > 0.0)) return roots;
    const double ratio = hi / lo;
    double prev_x = lo;
    double prev_f = fn(lo);
    for (int k = 1; k < n_probe; ++k) {
        const double x = lo * std::pow(ratio, static_cast<double>(k) / (n_probe - 1));
        const double f = fn(x);
        if ((f > 0.0) != (prev_f > 0.0))
            roots.push_back(bisect(fn, prev_x, x, prev_f));
        prev_x = x;
        prev_f = f;
    }
    return roots;
}

constexpr double kEdgeShrink = 1e-9;

}  // namespace

int SupportReport::cluster_count(int q) const {
    int n = 0;
    for (int i : clusters[q].members) n += mults[i];
    return n;
}

SupportReport separability(const PopulationSpectrum& spec, double c) {
    check_aspect(c);
    const int L = spec.num_distinct();
    SupportReport rep;
    rep.c = c;
    rep.L = L;
    rep.gammas = spec.gammas;
    rep.mults = spec.mults;

    const auto dpsi = [&](double f) { return psi_prime(spec, c, f); };
    const auto dxi = [&](double w) { return xi_prime(spec, c, w); };

    for (int i = 0; i + 1 < L; ++i) {
        const double a = spec.lambdas[i], b = spec.lambdas[i + 1];
        const double pad = kEdgeShrink * (b - a);
        const auto fr = roots_on_interval(dpsi, a + pad, b - pad);
        if (fr.size() != 1) {
            std::ostringstream msg;
            msg << "expected one critical point of Psi in (" << a << "," << b << "), found "
                << fr.size();
            throw ConvergenceError(msg.str(), 0.0);
        }
        rep.f_crit.push_back(fr.front());
    }
    for (int i = 0; i + 1 < L; ++i) {
        // gammas are descending; interval between gamma_{i+1} and gamma_i.
        const double a = spec.gammas[i + 1], b = spec.gammas[i];
        const double pad = kEdgeShrink * (b - a);
        const auto wr = roots_on_interval(dxi, a + pad, b - pad);
        if (wr.size() != 1) {
            std::ostringstream msg;
            msg << "expected one critical point of xi in (" << a << "," << b << "), found "
                << wr.size();
            throw ConvergenceError(msg.str(), 0.0);
        }
        rep.omega_bar.push_back(wr.front());
    }

    rep.phi.resize(L);
    if (L == 1) {
        rep.phi[0] = std::numeric_limits<double>::infinity();
    } else {
        std::vector<double> margins(L - 1);
        for (int i = 0; i + 1 < L; ++i) margins[i] = psi(spec, c, rep.f_crit[i]);
        rep.phi[0] = margins.front();
        rep.phi[L - 1] = margins.back();
        for (int m = 1; m + 1 < L; ++m) rep.phi[m] = std::max(margins[m - 1], margins[m]);
    }
    rep.cluster_separable.resize(L);
    rep.separable = true;
    for (int m = 0; m < L; ++m) {
        rep.cluster_separable[m] = rep.phi[m] > 0.0;
        rep.separable = rep.separable && rep.cluster_separable[m];
    }
    return rep;
}

SupportReport support_clusters(const PopulationSpectrum& spec, double c) {
    SupportReport rep = separability(spec, c);
    const int L = rep.L;
    const auto& g = spec.gammas;  // descending

    const auto fxi = [&](double w) { return xi(spec, c, w); };
    std::vector<double> roots;

    // Above the largest gamma: exactly one root, bounded by gamma_1/(1-sqrt(c)).
    {
        const double lo = g[0] * (1.0 + kEdgeShrink);
        const double hi = g[0] / (1.0 - std::sqrt(c)) * (1.0 + 1e-6);
        auto r = roots_on_interval(fxi, lo, hi);
        roots.insert(roots.end(), r.begin(), r.end());
    }
    // Interior intervals: zero roots (merged) or two (separated).
    for (int i = 0; i + 1 < L; ++i) {
        const double a = g[i + 1], b = g[i];
        const double pad = kEdgeShrink * (b - a);
        auto r = roots_on_interval(fxi, a + pad, b - pad);
        roots.insert(roots.end(), r.begin(), r.end());
    }
    // Below the smallest gamma: exactly one root, above gamma_L/(1+sqrt(c)).
    {
        const double hi = g[L - 1] * (1.0 - kEdgeShrink);
        const double lo = g[L - 1] / (1.0 + std::sqrt(c)) * (1.0 - 1e-6);
        auto r = roots_on_interval(fxi, lo, hi);
        roots.insert(roots.end(), r.begin(), r.end());
    }

    std::sort(roots.begin(), roots.end(), std::greater<double>());
    if (roots.empty() || roots.size() % 2 != 0) {
        std::ostringstream msg;
        msg << "support analysis found " << roots.size()
            << " roots of xi; an even positive count is required";
        throw ConvergenceError(msg.str(), 0.0);
    }
    const int Q = static_cast<int>(roots.size()) / 2;
    rep.Q = Q;

    // z = Phi(omega) maps support endpoints in omega to precision edges.
    const double N = spec.dimension();
    const auto phi_map = [&](double w) {
        double bm = 0.0;
        for (int i = 0; i < L; ++i) bm += spec.mults[i] / (g[i] - w);
        bm /= N;
        return w / (1.0 + w * c * bm);
    };

    rep.clusters.resize(Q);
    rep.gamma_to_cluster.assign(L, -1);
    for (int q = 0; q < Q; ++q) {
        SupportCluster& cl = rep.clusters[q];
        cl.omega_hi = roots[2 * q];
        cl.omega_lo = roots[2 * q + 1];
        cl.prec_hi = phi_map(cl.omega_hi);
        cl.prec_lo = phi_map(cl.omega_lo);
        cl.cov_lo = 1.0 / cl.prec_hi;
        cl.cov_hi = 1.0 / cl.prec_lo;
        for (int i = 0; i < L; ++i) {
            if (g[i] > cl.omega_lo && g[i] < cl.omega_hi) {
                cl.members.push_back(i);
                rep.gamma_to_cluster[i] = q;
            }
        }
        cl.merged = cl.members.size() > 1;
        if (cl.members.empty())
            throw ConvergenceError("support cluster contains no population eigenvalue", 0.0);
    }
    for (int i = 0; i < L; ++i)
        if (rep.gamma_to_cluster[i] < 0)
            throw ConvergenceError("population eigenvalue not covered by any cluster", 0.0);
    for (int q = 0; q + 1 < Q; ++q)
        if (!(rep.clusters[q].prec_lo > rep.clusters[q + 1].prec_hi))
            throw ConvergenceError("precision support edges are not strictly ordered", 0.0);

    // Poles of the omega -> z map: zeros of chi(omega) = 1 + omega c b_M(omega).
    const auto chi = [&](double w) {
        double s = 0.0;
        for (int i = 0; i < L; ++i) s += spec.mults[i] * w / (g[i] - w);
        return 1.0 + (c / N) * s;
    };
    {
        const double lo = g[0] * (1.0 + kEdgeShrink);
        const double hi = g[0] / (1.0 - c) * (1.0 + 1e-6);
        auto r = roots_on_interval(chi, lo, hi);
        if (r.size() != 1)
            throw ConvergenceError("expected one pole of the omega map above gamma_1", 0.0);
        rep.eta.push_back(r.front());
    }
    for (int i = 0; i + 1 < L; ++i) {
        const double a = g[i + 1], b = g[i];
        const double pad = kEdgeShrink * (b - a);
        auto r = roots_on_interval(chi, a + pad, b - pad);
        if (r.size() != 1)
            throw ConvergenceError("expected one pole of the omega map per gap", 0.0);
        rep.eta.push_back(r.front());
    }
    return rep;
}

}  // namespace pmx
