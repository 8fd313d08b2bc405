#include "pmx/contour.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "pmx/estimators.hpp"

namespace pmx {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mtx;
    if (n < 1) throw InputError("quadrature order must be positive");
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(n);
        if (it != cache.end()) {
            nodes = it->second.first;
            weights = it->second.second;
            return;
        }
    }
    std::vector<double> x(n), w(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton iteration on P_n from the Chebyshev-based initial guess.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    {
        std::lock_guard<std::mutex> lock(mtx);
        cache.emplace(n, std::make_pair(x, w));
    }
    nodes = std::move(x);
    weights = std::move(w);
}

ContourSpec make_contour(double t1, double t2, double y, int nodes_per_edge) {
    if (!(t1 < t2)) throw ContourError("contour requires t1 < t2");
    if (!(y > 0.0)) throw ContourError("contour requires positive half-height");
    if (nodes_per_edge < 1) throw ContourError("contour requires at least one node per edge");
    return {t1, t2, y, nodes_per_edge};
}

std::vector<std::pair<cplx, cplx>> contour_nodes(const ContourSpec& c) {
    std::vector<double> gx, gw;
    gauss_legendre(c.nodes_per_edge, gx, gw);
    std::vector<std::pair<cplx, cplx>> out;
    out.reserve(4 * gx.size());
    const double hx = 0.5 * (c.t2 - c.t1);
    const double mx = 0.5 * (c.t2 + c.t1);
    // Bottom: x - iy, left to right.
    for (std::size_t k = 0; k < gx.size(); ++k)
        out.emplace_back(cplx(mx + hx * gx[k], -c.y), cplx(gw[k] * hx, 0.0));
    // Right: t2 + is, upward; dz = i ds.
    for (std::size_t k = 0; k < gx.size(); ++k)
        out.emplace_back(cplx(c.t2, c.y * gx[k]), cplx(0.0, gw[k] * c.y));
    // Top: x + iy, right to left.
    for (std::size_t k = 0; k < gx.size(); ++k)
        out.emplace_back(cplx(mx + hx * gx[k], c.y), cplx(-gw[k] * hx, 0.0));
    // Left: t1 + is, downward.
    for (std::size_t k = 0; k < gx.size(); ++k)
        out.emplace_back(cplx(c.t1, c.y * gx[k]), cplx(0.0, -gw[k] * c.y));
    return out;
}

namespace {

// Graded mesh for the limiting kernel: branch points of the limiting
// transform sit on the real axis arbitrarily close to the vertical edges when
// spectral gaps are narrow. Dyadic panels toward Im z = 0 keep every panel's
// length comparable to its distance from the axis, restoring geometric
// convergence. Horizontal edges stay a full half-height away from the axis
// and keep single panels.
std::vector<std::pair<cplx, cplx>> graded_contour_nodes(const ContourSpec& c) {
    constexpr int kPanels = 12;
    std::vector<double> gx, gw;
    gauss_legendre(c.nodes_per_edge, gx, gw);
    std::vector<double> px, pw;
    gauss_legendre(std::max(4, c.nodes_per_edge / 12), px, pw);

    std::vector<std::pair<cplx, cplx>> out;
    out.reserve(2 * gx.size() + 4 * kPanels * px.size());
    const double hx = 0.5 * (c.t2 - c.t1);
    const double mx = 0.5 * (c.t2 + c.t1);

    std::vector<double> bounds(kPanels + 1);
    bounds[0] = 0.0;
    for (int k = 1; k <= kPanels; ++k)
        bounds[k] = c.y * std::ldexp(1.0, k - kPanels);

    const auto vertical = [&](double x, double sign) {
        for (int k = kPanels; k >= 1; --k) {
            const double a = -bounds[k], b = -bounds[k - 1];
            const double h = 0.5 * (b - a), m = 0.5 * (b + a);
            for (std::size_t j = 0; j < px.size(); ++j)
                out.emplace_back(cplx(x, m + h * px[j]), cplx(0.0, sign * pw[j] * h));
        }
        for (int k = 1; k <= kPanels; ++k) {
            const double a = bounds[k - 1], b = bounds[k];
            const double h = 0.5 * (b - a), m = 0.5 * (b + a);
            for (std::size_t j = 0; j < px.size(); ++j)
                out.emplace_back(cplx(x, m + h * px[j]), cplx(0.0, sign * pw[j] * h));
        }
    };

    for (std::size_t k = 0; k < gx.size(); ++k)
        out.emplace_back(cplx(mx + hx * gx[k], -c.y), cplx(gw[k] * hx, 0.0));
    vertical(c.t2, 1.0);
    for (std::size_t k = 0; k < gx.size(); ++k)
        out.emplace_back(cplx(mx + hx * gx[k], c.y), cplx(-gw[k] * hx, 0.0));
    vertical(c.t1, -1.0);
    return out;
}

}  // namespace

cplx ghat(const SampleSpectrum& sample, cplx z) {
    const auto& rho = sample.rho_hat;
    const double N = sample.N;
    const double cK = sample.c_K;
    cplx lead = 0.0, sq = 0.0;
    for (double r : rho) {
        const cplx den = r - z;
        if (std::abs(den) < 1e-14 * std::max(1.0, r))
            throw PoleError("ghat evaluated at a sample eigenvalue");
        lead += z / den;
        const cplx t = r / den;
        sq += t * t;
    }
    return -(lead / N) * (1.0 - cK + (cK / N) * sq);
}

TransformValue companion_at_inverse(const SampleSpectrum& sample, cplx z) {
    const auto& rho = sample.rho_hat;
    const double N = sample.N;
    const double cK = sample.c_K;
    cplx v = 0.0, d = 0.0;
    for (double r : rho) {
        const cplx den = r - z;
        if (std::abs(den) < 1e-14 * std::max(1.0, r))
            throw PoleError("companion transform evaluated at a sample eigenvalue");
        v += r * z / den;
        const cplx t = r / den;
        d += t * t;
    }
    TransformValue out;
    out.z = z;
    out.value = -(cK / N) * v - (1.0 - cK) * z;
    out.derivative = -(cK / N) * d - (1.0 - cK);
    return out;
}

namespace {

struct ClusterEdges {
    double lo = 0.0, hi = 0.0;
};

// Midpoint contour around cluster m of a descending cluster-edge list.
ContourSpec midpoint_contour(const std::vector<ClusterEdges>& edges, int m, double scale,
                             int nodes) {
    const int Q = static_cast<int>(edges.size());
    if (m < 0 || m >= Q) throw ContourError("cluster index out of range");
    const double lo = edges[m].lo, hi = edges[m].hi;
    const double width = hi - lo;
    const double pad_floor = std::max(0.1 * width, 1e-3 * std::max(std::abs(hi), 1e-300));
    const double gap_above = (m > 0) ? edges[m - 1].lo - hi : -1.0;
    const double gap_below = (m + 1 < Q) ? lo - edges[m + 1].hi : -1.0;
    if ((m > 0 && gap_above <= 0.0) || (m + 1 < Q && gap_below <= 0.0))
        throw ContourError("adjacent clusters overlap; cannot place a contour");

    double margin_hi, margin_lo;
    if (m > 0)
        margin_hi = 0.5 * gap_above;
    else
        margin_hi = std::max(gap_below > 0.0 ? 0.5 * gap_below : 0.0, pad_floor);
    if (m + 1 < Q)
        margin_lo = 0.5 * gap_below;
    else
        margin_lo = std::max(gap_above > 0.0 ? 0.5 * gap_above : 0.0, pad_floor);

    double t1 = lo - scale * margin_lo;
    const double t2 = hi + scale * margin_hi;
    // Keep the origin outside; the clamp decreases with the margin scale so
    // concentric contours at different scales stay strictly nested.
    if (lo > 0.0) {
        const double frac = std::min(0.6, std::max(0.2, 0.5 - 0.2 * (scale - 1.0)));
        t1 = std::max(t1, frac * lo);
    }
    return make_contour(t1, t2, 0.5 * (t2 - t1), nodes);
}

void verify_enclosure(const ContourSpec& c, const SampleSpectrum& sample, int expect_lo,
                      int expect_hi) {
    for (int i = 0; i < sample.N; ++i) {
        const bool inside = sample.rho_hat[i] > c.t1 && sample.rho_hat[i] < c.t2;
        const bool expected = i >= expect_lo && i < expect_hi;
        if (inside != expected) {
            std::ostringstream msg;
            msg << "contour (" << c.t1 << "," << c.t2 << ") encloses the wrong eigenvalue set"
                << "; separation failed at this sample size";
            throw ContourError(msg.str());
        }
    }
}

void check_pole_distance(const ContourSpec& c, const SampleSpectrum& sample) {
    const double limit = 1e-6 * (c.t2 - c.t1);
    for (double p : sample.rho_hat) {
        double d;
        if (p >= c.t1 && p <= c.t2)
            d = std::min({p - c.t1, c.t2 - p, c.y});
        else
            d = std::min(std::abs(p - c.t1), std::abs(p - c.t2));
        if (d < limit) throw PoleError("sample eigenvalue too close to the contour");
    }
}

std::vector<ClusterEdges> group_edges(const SampleSpectrum& sample,
                                      const std::vector<int>& mults) {
    const auto ranges = group_ranges(mults, sample.N);
    std::vector<ClusterEdges> edges(ranges.size());
    for (std::size_t q = 0; q < ranges.size(); ++q) {
        edges[q].hi = sample.rho_hat[ranges[q].first];       // descending
        edges[q].lo = sample.rho_hat[ranges[q].second - 1];
    }
    return edges;
}

void check_disjoint(const ContourSpec& a, const ContourSpec& b) {
    const bool apart = a.t2 < b.t1 || b.t2 < a.t1;
    const bool b_in_a = b.t1 > a.t1 && b.t2 < a.t2 && b.y < a.y;
    const bool a_in_b = a.t1 > b.t1 && a.t2 < b.t2 && a.y < b.y;
    if (!(apart || b_in_a || a_in_b)) throw ContourError("contour pair overlaps");
}

// Shared CLT kernel machinery: B is a companion-at-inverse value and D its
// z-derivative. The kernel is B1 B2 (D1 D2/(B1-B2)^2 - 1/(z1-z2)^2); the
// "kernel-only" part carries the first term alone.
struct NodeData {
    cplx z, wdz, B, D;
};

template <typename Transform>
std::vector<NodeData> precompute(const ContourSpec& c, Transform&& f, bool graded) {
    std::vector<NodeData> out;
    const auto nodes = graded ? graded_contour_nodes(c) : contour_nodes(c);
    out.reserve(nodes.size());
    for (const auto& [z, wdz] : nodes) {
        const TransformValue t = f(z);
        out.push_back({z, wdz, t.value, t.derivative});
    }
    return out;
}

std::pair<cplx, cplx> double_quadrature(const std::vector<NodeData>& a,
                                        const std::vector<NodeData>& b) {
    cplx total = 0.0, kernel_only = 0.0;
    for (const auto& p : a) {
        cplx row_total = 0.0, row_kernel = 0.0;
        for (const auto& q : b) {
            const cplx db = p.B - q.B;
            const cplx dz = p.z - q.z;
            const cplx k1 = p.D * q.D / (db * db);
            const cplx prod = p.B * q.B;
            row_kernel += prod * k1 * q.wdz;
            row_total += prod * (k1 - 1.0 / (dz * dz)) * q.wdz;
        }
        total += row_total * p.wdz;
        kernel_only += row_kernel * p.wdz;
    }
    return {total, kernel_only};
}

// The kernel has spurious poles wherever the companion transform takes the
// same value at two distinct points. For most cluster geometries those poles
// stay away from the contours; when one rides across them, the quadrature
// stops converging. A cheap two-resolution probe detects this. On the
// empirical path the kernel-only sub-integral must also vanish; the limiting
// kernel carries no such identity, so only consistency is required there.
template <typename Transform>
bool pair_probe_clean(const ContourSpec& a, const ContourSpec& b, Transform&& f,
                      int probe_lo, int probe_hi, bool require_small_kernel, bool graded) {
    ContourSpec pa = a, pb = b;
    pa.nodes_per_edge = probe_lo;
    pb.nodes_per_edge = probe_lo;
    const auto lo = double_quadrature(precompute(pa, f, graded), precompute(pb, f, graded));
    pa.nodes_per_edge = probe_hi;
    pb.nodes_per_edge = probe_hi;
    const auto hi = double_quadrature(precompute(pa, f, graded), precompute(pb, f, graded));
    const double scale = 1.0 + std::abs(hi.first);
    if (std::abs(hi.first - lo.first) > 1e-5 * scale) return false;
    return !require_small_kernel || std::abs(hi.second) <= 1e-5 * scale;
}

// Shape candidates (margin scale per contour, shared height factor): the
// concentric 0.9/1.1 (same cluster) and midpoint 0.9/0.9 (distinct clusters)
// constructions come first and usually probe clean; the rest move the edges
// and flatten the rectangles to dodge unlucky spurious-pole placements.
struct PairShape {
    double scale_a, scale_b, y_factor;
};
constexpr PairShape kSameClusterShapes[] = {
    {0.9, 1.1, 1.0},  {0.9, 1.1, 0.25},  {0.7, 1.05, 1.0}, {0.7, 1.05, 0.3},
    {0.55, 0.95, 1.0}, {0.55, 0.95, 0.3}, {0.8, 1.2, 0.25}, {0.6, 1.15, 0.4},
    {0.75, 1.3, 0.2},  {0.65, 1.25, 0.5}};
constexpr PairShape kDistinctClusterShapes[] = {
    {0.9, 0.9, 1.0}, {0.5, 0.5, 1.0},  {0.5, 0.8, 1.0}, {0.8, 0.5, 1.0},
    {0.7, 0.7, 0.3}, {0.5, 0.95, 0.3}, {0.9, 0.6, 0.25}, {0.6, 0.9, 0.4},
    {0.5, 0.65, 1.0}, {0.95, 0.5, 0.3}};

}  // namespace

ContourSpec build_contour(const SupportReport& report, const SampleSpectrum& sample, int m,
                          int nodes_per_edge, double scale) {
    if (m < 0 || m >= report.Q) throw ContourError("cluster index out of range");
    if (report.clusters[m].merged)
        throw ContourError("cluster is merged; spectral separation does not hold");
    for (int i : report.clusters[m].members)
        if (!report.cluster_separable[i])
            throw ContourError("cluster fails the separation condition");

    std::vector<ClusterEdges> edges(report.Q);
    int total = 0;
    for (int q = 0; q < report.Q; ++q) {
        edges[q] = {report.clusters[q].prec_lo, report.clusters[q].prec_hi};
        total += report.cluster_count(q);
    }
    if (total != sample.N)
        throw ShapeError("support report dimension does not match the sample");

    const ContourSpec c = midpoint_contour(edges, m, scale, nodes_per_edge);
    int start = 0;
    for (int q = 0; q < m; ++q) start += report.cluster_count(q);
    verify_enclosure(c, sample, start, start + report.cluster_count(m));
    return c;
}

ContourSpec group_contour(const SampleSpectrum& sample, const std::vector<int>& mults, int m,
                          int nodes_per_edge, double scale) {
    const auto ranges = group_ranges(mults, sample.N);
    if (m < 0 || m >= static_cast<int>(ranges.size()))
        throw ContourError("group index out of range");
    const ContourSpec c =
        midpoint_contour(group_edges(sample, mults), m, scale, nodes_per_edge);
    verify_enclosure(c, sample, ranges[m].first, ranges[m].second);
    return c;
}

std::pair<ContourSpec, ContourSpec> group_contour_pair(const SampleSpectrum& sample,
                                                       const std::vector<int>& mults, int m,
                                                       int n, int nodes_per_edge) {
    const auto transform = [&](cplx z) { return companion_at_inverse(sample, z); };
    const auto& candidates = (m == n) ? kSameClusterShapes : kDistinctClusterShapes;
    for (const auto& [sa, sb, yf] : candidates) {
        ContourSpec a, b;
        try {
            a = group_contour(sample, mults, m, nodes_per_edge, sa);
            b = group_contour(sample, mults, n, nodes_per_edge, sb);
            a.y *= yf;
            b.y *= yf;
            check_disjoint(a, b);
        } catch (const ContourError&) {
            continue;
        } catch (const PoleError&) {
            continue;
        }
        if (pair_probe_clean(a, b, transform, 96, 144, true, false)) return {a, b};
    }
    throw ContourError("no clean contour pair found for this cluster pair");
}

double contour_estimate(const SampleSpectrum& sample, const std::vector<int>& mults, int m,
                        const ContourSpec& contour) {
    const auto ranges = group_ranges(mults, sample.N);
    if (m < 0 || m >= static_cast<int>(ranges.size()))
        throw ContourError("group index out of range");
    check_pole_distance(contour, sample);

    cplx integral = 0.0;
    for (const auto& [z, wdz] : contour_nodes(contour)) integral += ghat(sample, z) * wdz;

    const double Nm = mults[m];
    const cplx value =
        integral * static_cast<double>(sample.N) / (Nm * cplx(0.0, 2.0 * std::numbers::pi));
    if (std::abs(value.imag()) > 1e-8 * (1.0 + std::abs(value)))
        throw ContourError("quadrature left a non-negligible imaginary residue");
    return value.real();
}

double residue_estimate(const SampleSpectrum& sample, const std::vector<int>& mults, int m) {
    const auto ranges = group_ranges(mults, sample.N);
    const auto& rho = sample.rho_hat;
    const double N = sample.N;
    const double cK = sample.c_K;
    double acc = 0.0;
    for (int k = ranges[m].first; k < ranges[m].second; ++k) {
        double third = 0.0;   // i == k: third-order pole
        double second = 0.0;  // i != k: second-order poles
        for (int i = 0; i < sample.N; ++i) {
            if (i == k) continue;
            const double d = rho[i] - rho[k];
            third += (rho[i] / d) * (rho[i] / d);
            second += rho[k] * rho[k] * rho[i] / (d * d);
        }
        acc += rho[k] * (1.0 - cK + (cK / N) * third) - (cK / N) * second;
    }
    return acc / mults[m];
}

cplx clt_kernel(const TransformValue& a, const TransformValue& b) {
    const cplx db = a.value - b.value;
    const cplx dz = a.z - b.z;
    return a.value * b.value *
           (a.derivative * b.derivative / (db * db) - 1.0 / (dz * dz));
}

CltQuad contour_clt_parts(const SampleSpectrum& sample, const std::vector<int>& mults, int m,
                          int n, const ContourSpec& cm, const ContourSpec& cn) {
    const auto ranges = group_ranges(mults, sample.N);
    if (m < 0 || n < 0 || m >= static_cast<int>(ranges.size()) ||
        n >= static_cast<int>(ranges.size()))
        throw ContourError("group index out of range");
    check_disjoint(cm, cn);
    check_pole_distance(cm, sample);
    check_pole_distance(cn, sample);

    const auto fa =
        precompute(cm, [&](cplx z) { return companion_at_inverse(sample, z); }, false);
    const auto fb =
        precompute(cn, [&](cplx z) { return companion_at_inverse(sample, z); }, false);
    const auto [total, kernel_only] = double_quadrature(fa, fb);

    const double K = sample.K;
    const double beta =
        -K * K / (4.0 * std::numbers::pi * std::numbers::pi * mults[m] * mults[n]);
    const cplx theta = beta * total;
    const cplx i1 = beta * kernel_only;
    if (std::abs(theta.imag()) > 1e-8 * (1.0 + std::abs(theta.real())))
        throw ContourError("covariance quadrature left a non-negligible imaginary residue");
    return {theta.real(), i1.real()};
}

double contour_clt_covariance(const SampleSpectrum& sample, const std::vector<int>& mults,
                              int m, int n, const ContourSpec& cm, const ContourSpec& cn) {
    return contour_clt_parts(sample, mults, m, n, cm, cn).theta;
}

Eigen::MatrixXd theoretical_clt_covariance(const PopulationSpectrum& spec, double c,
                                           const SupportReport& report, int nodes_per_edge) {
    if (!report.separable)
        throw ContourError("limiting covariance requires a separable spectrum");
    const int L = spec.num_distinct();
    if (report.Q != L) throw ContourError("support report has merged clusters");
    const double N = spec.dimension();

    std::vector<ClusterEdges> edges(L);
    for (int q = 0; q < L; ++q)
        edges[q] = {report.clusters[q].prec_lo, report.clusters[q].prec_hi};

    // Companion transform composed with inversion; D = d/dz u(1/z) = -u'(1/z)/z^2.
    const auto transform = [&](cplx z) {
        const TransformValue u = limiting_dual_transform(spec, c, 1.0 / z);
        TransformValue out;
        out.z = z;
        out.value = u.value;
        out.derivative = -u.derivative / (z * z);
        return out;
    };

    Eigen::MatrixXd theta(L, L);
    for (int m = 0; m < L; ++m) {
        for (int n = m; n < L; ++n) {
            const auto& candidates = (m == n) ? kSameClusterShapes : kDistinctClusterShapes;
            bool done = false;
            for (const auto& [sa, sb, yf] : candidates) {
                ContourSpec ca, cb;
                try {
                    ca = midpoint_contour(edges, m, sa, nodes_per_edge);
                    cb = midpoint_contour(edges, n, sb, nodes_per_edge);
                    ca.y *= yf;
                    cb.y *= yf;
                    check_disjoint(ca, cb);
                } catch (const ContourError&) {
                    continue;
                }
                if (!pair_probe_clean(ca, cb, transform, 48, 72, false, true)) continue;
                const auto fa = precompute(ca, transform, true);
                const auto fb = precompute(cb, transform, true);
                const auto [total, kernel_only] = double_quadrature(fa, fb);
                (void)kernel_only;
                const double cm = c * spec.mults[m] / N;
                const double cn = c * spec.mults[n] / N;
                const cplx value =
                    -total / (4.0 * std::numbers::pi * std::numbers::pi * cm * cn);
                if (std::abs(value.imag()) > 1e-8 * (1.0 + std::abs(value.real())))
                    throw ContourError("limiting covariance quadrature has imaginary residue");
                theta(m, n) = value.real();
                theta(n, m) = value.real();
                done = true;
                break;
            }
            if (!done)
                throw ContourError("no clean contour pair for the limiting covariance");
        }
    }
    return theta;
}

}  // namespace pmx
