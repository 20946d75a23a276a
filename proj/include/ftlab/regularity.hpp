#pragma once

// Affine-excess decay across scales, discrete gradient moduli, and the
// comparison of measured decay against a constructed modulus.
//
// Balls are grid-aligned infinity-norm balls, clipped to the square.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "modulus.hpp"

namespace ftlab {

struct AffineFit {
    Point x0{0.0, 0.0};
    double rho = 0.0;
    double a = 0.0;
    std::array<double, 2> b{0.0, 0.0};
    /// sup over the ball of |u - (a + b.(x - x0))|
    double E = 0.0;
    int nodes = 0;
    /// No single-coordinate move of (a, b) by 1e-9 lowers E.
    bool locally_optimal = false;

    double operator()(const Point& x) const { return a + b[0] * (x[0] - x0[0]) + b[1] * (x[1] - x0[1]); }
};

namespace lab_detail {

struct BallData {
    std::vector<double> dx, dy, val;
    double width_x = 0.0, width_y = 0.0;
};

inline BallData ball(const DiscreteField& u, const Point& x0, double rho) {
    const Grid& g = u.grid();
    BallData out;
    const double tol = 1e-9 * g.h();
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point p = g.point(k);
        const double dx = p[0] - x0[0], dy = g.dim() == 2 ? p[1] - x0[1] : 0.0;
        if (std::abs(dx) > rho + tol || std::abs(dy) > rho + tol) continue;
        out.dx.push_back(dx);
        out.dy.push_back(dy);
        out.val.push_back(u[k]);
        xlo = std::min(xlo, dx), xhi = std::max(xhi, dx);
        ylo = std::min(ylo, dy), yhi = std::max(yhi, dy);
    }
    if (!out.val.empty()) out.width_x = xhi - xlo, out.width_y = yhi - ylo;
    return out;
}

/// Range of u - b.d over the ball as (min, max).
inline std::pair<double, double> range(const BallData& bd, double b0, double b1) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < bd.val.size(); ++i) {
        const double v = bd.val[i] - b0 * bd.dx[i] - b1 * bd.dy[i];
        lo = std::min(lo, v), hi = std::max(hi, v);
    }
    return {lo, hi};
}

inline double excess_at(const BallData& bd, double a, double b0, double b1) {
    double e = 0.0;
    for (std::size_t i = 0; i < bd.val.size(); ++i)
        e = std::max(e, std::abs(bd.val[i] - a - b0 * bd.dx[i] - b1 * bd.dy[i]));
    return e;
}

/// With b fixed the best a is the midpoint of the range, so the minimax
/// problem reduces to the convex function b -> (max - min) / 2.
inline double half_osc(const BallData& bd, double b0, double b1) {
    const auto [lo, hi] = range(bd, b0, b1);
    return 0.5 * (hi - lo);
}

template <class Fn>
double golden_min(Fn&& f, double lo, double hi, int iters) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && hi - lo > 1e-16 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++i) {
        if (f1 <= f2) {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - g * (hi - lo), f1 = f(x1);
        } else {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + g * (hi - lo), f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

/// Least-squares affine fit of the ball data, as (a, b0, b1).
inline std::array<double, 3> least_squares(const BallData& bd, int dim) {
    const std::size_t m = bd.val.size();
    double s[3][3] = {}, r[3] = {};
    for (std::size_t i = 0; i < m; ++i) {
        const double row[3] = {1.0, bd.dx[i], bd.dy[i]};
        for (int p = 0; p < 3; ++p) {
            r[p] += row[p] * bd.val[i];
            for (int q = 0; q < 3; ++q) s[p][q] += row[p] * row[q];
        }
    }
    const int nv = dim + 1;
    // Gaussian elimination with partial pivoting on the normal equations
    double x[3] = {0.0, 0.0, 0.0};
    int perm[3] = {0, 1, 2};
    for (int c = 0; c < nv; ++c) {
        int piv = c;
        for (int rr = c + 1; rr < nv; ++rr)
            if (std::abs(s[perm[rr]][c]) > std::abs(s[perm[piv]][c])) piv = rr;
        std::swap(perm[c], perm[piv]);
        const double d = s[perm[c]][c];
        if (std::abs(d) < 1e-300) throw DomainError("best_affine: degenerate node configuration");
        for (int rr = c + 1; rr < nv; ++rr) {
            const double f = s[perm[rr]][c] / d;
            for (int q = c; q < nv; ++q) s[perm[rr]][q] -= f * s[perm[c]][q];
            r[perm[rr]] -= f * r[perm[c]];
        }
    }
    for (int c = nv - 1; c >= 0; --c) {
        double acc = r[perm[c]];
        for (int q = c + 1; q < nv; ++q) acc -= s[perm[c]][q] * x[q];
        x[c] = acc / s[perm[c]][c];
    }
    return {x[0], x[1], dim == 2 ? x[2] : 0.0};
}

}  // namespace lab_detail

/// Minimax affine approximation of u over the infinity ball B_rho(x0).
inline AffineFit best_affine(const DiscreteField& u, const Point& x0, double rho) {
    using namespace lab_detail;
    const int d = u.grid().dim();
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("best_affine requires rho > 0");
    const BallData bd = ball(u, x0, rho);
    if (static_cast<int>(bd.val.size()) < d + 2)
        throw DomainError("best_affine: ball holds " + std::to_string(bd.val.size()) + " nodes, need at least " +
                          std::to_string(d + 2));
    if (bd.width_x <= 0.0 || (d == 2 && bd.width_y <= 0.0))
        throw DomainError("best_affine: ball is flat in one direction");

    const auto seed = least_squares(bd, d);
    const double e_seed = half_osc(bd, seed[1], seed[2]);
    // E(b) >= |b - b*|_1 min(width) / 2 - E*, so b* lies within this radius of the seed
    const double wmin = d == 2 ? std::min(bd.width_x, bd.width_y) : bd.width_x;
    const double R = 4.0 * e_seed / wmin + 1e-12;
    constexpr int kIters = 90;

    double b0 = seed[1], b1 = seed[2];
    if (d == 1) {
        b0 = golden_min([&](double x) { return half_osc(bd, x, 0.0); }, seed[1] - R, seed[1] + R, kIters);
    } else {
        auto inner = [&](double y) {
            return golden_min([&](double x) { return half_osc(bd, x, y); }, seed[1] - R, seed[1] + R, kIters);
        };
        b1 = golden_min([&](double y) { return half_osc(bd, inner(y), y); }, seed[2] - R, seed[2] + R, kIters);
        b0 = inner(b1);
    }
    if (half_osc(bd, b0, b1) > e_seed) b0 = seed[1], b1 = seed[2];

    // coordinate polishing, shrinking steps
    double best = half_osc(bd, b0, b1);
    for (double step = std::max(R, 1e-9); step >= 1e-12; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (int c = 0; c < d; ++c)
                for (double s : {-step, step}) {
                    const double t0 = c == 0 ? b0 + s : b0, t1 = c == 1 ? b1 + s : b1;
                    const double e = half_osc(bd, t0, t1);
                    if (e < best) best = e, b0 = t0, b1 = t1, moved = true;
                }
        }
    }

    AffineFit fit;
    fit.x0 = x0;
    fit.rho = rho;
    fit.b = {b0, d == 2 ? b1 : 0.0};
    const auto [lo, hi] = range(bd, fit.b[0], fit.b[1]);
    fit.a = 0.5 * (lo + hi);
    fit.E = excess_at(bd, fit.a, fit.b[0], fit.b[1]);
    fit.nodes = static_cast<int>(bd.val.size());

    const double slack = 1e-14 * std::max(1.0, fit.E);
    bool opt = true;
    for (int c = 0; c <= d && opt; ++c)
        for (double s : {-1e-9, 1e-9}) {
            double a = fit.a, p0 = fit.b[0], p1 = fit.b[1];
            (c == 0 ? a : c == 1 ? p0 : p1) += s;
            if (excess_at(bd, a, p0, p1) < fit.E - slack) opt = false;
        }
    fit.locally_optimal = opt;
    return fit;
}

struct GradientSample {
    double distance;
    double difference;
};

struct DecayProfile {
    Point x0{0.0, 0.0};
    double r = 0.5;
    int requested = 0;
    std::vector<double> scales;  // r^n, strictly decreasing
    std::vector<double> excess;  // E(rho_n)
    std::vector<double> rates;   // E(rho_n) / rho_n
    std::vector<AffineFit> fits;
    /// Least-squares fit log(rate) = slope * log(rho) + intercept.
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    bool clean_affine = false;
    /// Scales below 3h / 2 were dropped.
    bool truncated = false;
    std::vector<GradientSample> gradient_samples;
};

namespace lab_detail {

inline std::array<double, 2> grad_h(const DiscreteField& u, std::size_t k) {
    const Grid& g = u.grid();
    const int i = g.ix(k), j = g.jy(k), n = g.n();
    auto diff = [&](int lo_i, int hi_i, std::size_t lo_k, std::size_t hi_k) {
        return (u[hi_k] - u[lo_k]) / ((hi_i - lo_i) * g.h());
    };
    std::array<double, 2> out{0.0, 0.0};
    const int il = std::max(i - 1, 0), ir = std::min(i + 1, n - 1);
    out[0] = diff(il, ir, g.index(il, j), g.index(ir, j));
    if (g.dim() == 2) {
        const int jl = std::max(j - 1, 0), jr = std::min(j + 1, n - 1);
        out[1] = diff(jl, jr, g.index(i, jl), g.index(i, jr));
    }
    return out;
}

}  // namespace lab_detail

/// best_affine at rho_n = r^n, n = 1..N, regression of log(E/rho) on log rho,
/// and the largest central-difference gradient change between the node
/// nearest x0 and nodes within rho_n (at distance at least 2h).
inline DecayProfile decay_scan(const DiscreteField& u, const Point& x0, double r, int N) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("decay_scan requires r in (0, 1)");
    if (N < 1) throw DomainError("decay_scan requires N >= 1");
    const Grid& g = u.grid();
    DecayProfile prof;
    prof.x0 = x0;
    prof.r = r;
    prof.requested = N;
    double rho = 1.0;
    for (int n = 1; n <= N; ++n) {
        rho *= r;
        if (2.0 * rho < 3.0 * g.h()) {
            prof.truncated = true;
            break;
        }
        auto fit = best_affine(u, x0, rho);
        prof.scales.push_back(rho);
        prof.excess.push_back(fit.E);
        prof.rates.push_back(fit.E / rho);
        prof.fits.push_back(fit);
    }

    const double scale = std::max(1.0, u.max_abs());
    prof.clean_affine = std::all_of(prof.excess.begin(), prof.excess.end(),
                                    [&](double e) { return e <= 1e-10 * scale; });
    if (!prof.clean_affine) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (std::size_t i = 0; i < prof.scales.size(); ++i) {
            if (!(prof.rates[i] > 0.0)) continue;
            const double x = std::log(prof.scales[i]), y = std::log(prof.rates[i]);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
            ++m;
        }
        if (m >= 2) {
            const double den = m * sxx - sx * sx;
            prof.slope = (m * sxy - sx * sy) / den;
            prof.intercept = (sy - prof.slope * sx) / m;
        }
    }

    const std::size_t c = g.nearest(x0);
    const auto gc = lab_detail::grad_h(u, c);
    const Point pc = g.point(c);
    for (double s : prof.scales) {
        double worst = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Point p = g.point(k);
            const double dist = std::max(std::abs(p[0] - pc[0]), std::abs(p[1] - pc[1]));
            if (dist < 2.0 * g.h() - 1e-12 || dist > s + 1e-12) continue;
            const auto gk = lab_detail::grad_h(u, k);
            worst = std::max(worst, std::hypot(gk[0] - gc[0], gk[1] - gc[1]));
        }
        prof.gradient_samples.push_back({s, worst});
    }
    return prof;
}

/// u_1(x) = (u(x0 + r x) - l(x0 + r x)) / (mu r) on [-1, 1]^d with l the fit
/// and x0 its centre. When r / h is an integer m >= 4 and x0 is a node the
/// result lives on the exact (2m + 1)-node subgrid; otherwise it is
/// interpolated onto a grid with the input resolution.
inline DiscreteField rescale_field(const DiscreteField& u, const AffineFit& fit, double r, double mu) {
    if (!(mu > 0.0) || !(r > 0.0)) throw DomainError("rescale_field requires r > 0 and mu > 0");
    const Grid& g = u.grid();
    const int d = g.dim();
    const double tol = 1e-9;
    for (int c = 0; c < d; ++c)
        if (fit.x0[c] - r < -1.0 - tol || fit.x0[c] + r > 1.0 + tol)
            throw DomainError("rescale_field samples outside the grid");
    const double m_real = r / g.h();
    const int m = static_cast<int>(std::lround(m_real));
    const std::size_t c0 = g.nearest(fit.x0);
    const Point pc = g.point(c0);
    const bool on_node = std::abs(pc[0] - fit.x0[0]) < tol * g.h() && (d == 1 || std::abs(pc[1] - fit.x0[1]) < tol * g.h());
    const bool exact = std::abs(m_real - m) < 1e-9 && m >= 4 && on_node;
    const Grid out_grid(d, exact ? 2 * m + 1 : g.n());
    DiscreteField out(out_grid);
    const double scale = 1.0 / (mu * r);
    for (std::size_t k = 0; k < out_grid.size(); ++k) {
        const Point x = out_grid.point(k);
        Point y{fit.x0[0] + r * x[0], d == 2 ? fit.x0[1] + r * x[1] : 0.0};
        double v;
        if (exact) {
            const int i = g.ix(c0) + (out_grid.ix(k) - m);
            const int j = d == 2 ? g.jy(c0) + (out_grid.jy(k) - m) : 0;
            v = u.at(i, j);
        } else {
            y[0] = std::clamp(y[0], -1.0, 1.0);
            if (d == 2) y[1] = std::clamp(y[1], -1.0, 1.0);
            v = interpolate(u, y);
        }
        out[k] = (v - fit(y)) * scale;
    }
    return out;
}

struct ModulusComparison {
    std::vector<double> scales, excess, omega, ratios;
    /// max over scales of E / (rho omega(rho))
    double C_star = 0.0;
    /// max ratio / min ratio; +inf when some ratio vanishes but not all
    double spread = 0.0;
    bool envelope_holds = true;
};

/// Ratios E(rho) / (rho omega(rho)) over the profile scales inside
/// [rho_min, rho_max].
inline ModulusComparison compare_modulus(const DecayProfile& prof, const Modulus& omega, double rho_min = 0.0,
                                         double rho_max = std::numeric_limits<double>::infinity()) {
    ModulusComparison cmp;
    for (std::size_t i = 0; i < prof.scales.size(); ++i) {
        const double rho = prof.scales[i];
        if (rho < rho_min * (1 - 1e-12) || rho > rho_max * (1 + 1e-12)) continue;
        const double w = omega(rho);
        const double e = prof.excess[i];
        double ratio = 0.0;
        if (w > 0.0) {
            ratio = e / (rho * w);
        } else if (e > 0.0) {
            throw DomainError("omega vanishes at scale " + std::to_string(rho) +
                              " where the excess is positive; raise K");
        }
        cmp.scales.push_back(rho);
        cmp.excess.push_back(e);
        cmp.omega.push_back(w);
        cmp.ratios.push_back(ratio);
    }
    if (cmp.ratios.empty()) throw DomainError("compare_modulus: no profile scale in the requested window");
    const auto [lo, hi] = std::minmax_element(cmp.ratios.begin(), cmp.ratios.end());
    cmp.C_star = *hi;
    if (*hi == 0.0)
        cmp.spread = 1.0;
    else
        cmp.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cmp.ratios.size(); ++i)
        if (cmp.excess[i] > cmp.C_star * cmp.omega[i] * cmp.scales[i] * (1.0 + 1e-12)) cmp.envelope_holds = false;
    return cmp;
}

}  // namespace ftlab
