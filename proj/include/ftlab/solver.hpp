#pragma once

// Monotone pseudo-time relaxation for sigma_{sgn u}(|q + Du|) F(D^2 u) = f on
// [-1, 1]^d with Dirichlet data.
//
// Second derivatives come from directional second differences along the
// axes and, in 2D, the two diagonals. Every discrete operator is
// nondecreasing in the neighbour values and nonincreasing in the centre
// value, so the explicit update u <- u + dt R(u) is monotone under the CFL
// bound dt * sigma * (centre coefficient) <= 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "problem.hpp"

namespace ftlab {

struct SchemeConfig {
    /// 0 selects the CFL-limited step; a positive value caps it.
    double dt = 0.0;
    double tol_solve = 1e-6;
    int max_iter = 200000;
    /// Lower clamp on the sigma argument; negative selects 1e-4 * max(1, ||g||_inf).
    double eps_deg = -1.0;
    double cfl = 0.9;
    /// Per-node CFL step instead of one global step.
    bool local_time_step = true;
    /// Initialise from the solution on the grid with (n + 1) / 2 nodes.
    bool nested = true;
    /// The local step never uses a sigma below this fraction of the largest one.
    double sigma_floor = 1e-2;
    /// Consecutive residual increases treated as divergence.
    int divergence_window = 500;
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_residual = std::numeric_limits<double>::infinity();
    double dt_used = 0.0;
    double eps_deg = 0.0;
    bool converged = false;
    /// Iterations summed over all nested levels.
    long total_iterations = 0;
    std::vector<int> levels;  // n of each level, coarsest first
};

class SolverError : public std::runtime_error {
   public:
    SolverError(const std::string& what, SolveDiagnostics diag)
        : std::runtime_error(what), diagnostics(std::move(diag)) {}
    SolveDiagnostics diagnostics;
};

struct SolveResult {
    DiscreteField field;
    SolveDiagnostics diagnostics;
};

/// Discrete operator sigma(max(|q + grad_h u|, eps)) F_h(u) at interior nodes.
///
/// The gradient magnitude is the quadratic mean of the one-sided
/// differences, sqrt(sum_i ((q_i + D+_i u)^2 + (q_i + D-_i u)^2) / 2). It is
/// second-order consistent like central differencing but does not vanish at
/// a discrete extremum, where central differences would freeze the
/// degenerate factor at sigma(eps).
class Discretization {
   public:
    Discretization(const ProblemInstance& prob, const Grid& grid, double eps_deg)
        : prob_(prob), grid_(grid), eps_(eps_deg) {
        const int d = grid.dim();
        const auto& pair = prob.F.pair();
        const double ih2 = 1.0 / (grid.h() * grid.h());
        arg_cap_ = std::min(prob.sigma_plus.t_max(), prob.sigma_minus.t_max());
        switch (prob.F.kind()) {
            case OperatorKind::trace: centre_ = 2.0 * d * ih2; break;
            case OperatorKind::pucci_minus:
            case OperatorKind::pucci_plus: centre_ = 2.0 * d * pair.Lambda * ih2; break;
            case OperatorKind::bellman_min: {
                if (prob.F.fixed_dim() != d)
                    throw ConfigError("bellman-min coefficient dimension does not match the grid");
                double worst = 0.0;
                for (const auto& a : prob.F.coefficients()) {
                    Weights w;
                    if (d == 1) {
                        w = {a(0, 0), 0.0, 0.0, 0.0};
                    } else {
                        const double off = std::abs(a(0, 1));
                        w = {a(0, 0) - off, a(1, 1) - off, std::max(a(0, 1), 0.0), std::max(-a(0, 1), 0.0)};
                        if (w[0] < 0.0 || w[1] < 0.0)
                            throw ConfigError(
                                "bellman-min coefficient is not diagonally dominant; no monotone "
                                "wide-stencil decomposition");
                    }
                    weights_.push_back(w);
                    worst = std::max(worst, 2.0 * (w[0] + w[1] + w[2] + w[3]));
                }
                centre_ = worst * ih2;
                break;
            }
        }
        f_.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) f_[k] = prob.f(grid.point(k));
        if (prob.f_minus) {
            fm_.resize(grid.size());
            for (std::size_t k = 0; k < grid.size(); ++k) fm_[k] = prob.f_minus(grid.point(k));
            phase_width_ = grid.h() * grid.h();
        }
        if (prob.F.fixed_dim() != 0 && prob.F.fixed_dim() != d)
            throw ConfigError("operator dimension does not match the grid");
    }

    double eps() const { return eps_; }
    /// Upper bound on the centre coefficient of F_h (without sigma).
    double centre_coefficient() const { return centre_; }
    /// Source at node k for the current value u_k there. A phased source
    /// ramps linearly between f_minus and f across |u_k| < phase_width, which
    /// keeps the scheme monotone in u_k.
    double source(std::size_t k, double uk) const {
        if (fm_.empty()) return f_[k];
        const double mid = 0.5 * (f_[k] + fm_[k]), half = 0.5 * (f_[k] - fm_[k]);
        return mid + half * std::clamp(uk / phase_width_, -1.0, 1.0);
    }

    /// |d source / d u_k|.
    double source_slope(std::size_t k, double uk) const {
        if (fm_.empty() || std::abs(uk) >= phase_width_) return 0.0;
        return 0.5 * std::abs(f_[k] - fm_[k]) / phase_width_;
    }

    double phase_width() const { return phase_width_; }

    struct NodeValue {
        double sigma;
        double Fh;
        /// |d sigma / d u_centre|, the sensitivity of the degenerate factor.
        double dsigma;
    };

    NodeValue evaluate(const std::vector<double>& u, std::size_t k) const {
        const int n = grid_.n();
        const double h = grid_.h();
        const double ih = 1.0 / h, ih2 = ih * ih;
        const double c = u[k];
        const double e = u[k + 1], w = u[k - 1];
        const double dxp = (e - c) * ih + prob_.q[0], dxm = (c - w) * ih + prob_.q[0];
        double g2 = 0.5 * (dxp * dxp + dxm * dxm);
        double dg2 = (dxm - dxp) * ih;  // d(g^2)/d(centre)
        const double dxx = (e - 2.0 * c + w) * ih2;
        double Fh;
        if (grid_.dim() == 1) {
            Fh = apply_1d(dxx);
        } else {
            const double nn = u[k + n], s = u[k - n];
            const double dyp = (nn - c) * ih + prob_.q[1], dym = (c - s) * ih + prob_.q[1];
            g2 += 0.5 * (dyp * dyp + dym * dym);
            dg2 += (dym - dyp) * ih;
            const double dyy = (nn - 2.0 * c + s) * ih2;
            const double dpp = (u[k + n + 1] - 2.0 * c + u[k - n - 1]) * ih2;  // along (1, 1)
            const double dpm = (u[k + n - 1] - 2.0 * c + u[k - n + 1]) * ih2;  // along (1, -1)
            Fh = apply_2d(dxx, dyy, dpp, dpm);
        }
        const double g = std::sqrt(g2);
        const double t = std::clamp(g, eps_, arg_cap_);
        const double sigma = sigma_at(prob_, c, t);
        double dsigma = 0.0;
        if (g > eps_ && g < arg_cap_ && sigma > 0.0) {
            const double el = c >= 0.0 ? prob_.sigma_plus.elasticity(t) : prob_.sigma_minus.elasticity(t);
            dsigma = sigma * el * std::abs(dg2) / (2.0 * g2);
        }
        return {sigma, Fh, dsigma};
    }

   private:
    using Weights = std::array<double, 4>;

    double apply_1d(double dxx) const {
        const auto& pr = prob_.F.pair();
        switch (prob_.F.kind()) {
            case OperatorKind::trace: return dxx;
            case OperatorKind::pucci_minus: return dxx > 0.0 ? pr.lambda * dxx : pr.Lambda * dxx;
            case OperatorKind::pucci_plus: return dxx > 0.0 ? pr.Lambda * dxx : pr.lambda * dxx;
            case OperatorKind::bellman_min: {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& w : weights_) best = std::min(best, w[0] * dxx);
                return best;
            }
        }
        return 0.0;
    }

    double apply_2d(double dxx, double dyy, double dpp, double dpm) const {
        const auto& pr = prob_.F.pair();
        switch (prob_.F.kind()) {
            case OperatorKind::trace: return dxx + dyy;
            case OperatorKind::pucci_minus:
            case OperatorKind::pucci_plus: {
                // extreme unit-direction curvatures approximate the eigenvalues
                const double v[4] = {dxx, dyy, 0.5 * dpp, 0.5 * dpm};
                const double hi = *std::max_element(v, v + 4);
                const double lo = *std::min_element(v, v + 4);
                const double pos = std::max(hi, 0.0) + std::max(lo, 0.0);
                const double neg = std::min(hi, 0.0) + std::min(lo, 0.0);
                return prob_.F.kind() == OperatorKind::pucci_minus ? pr.lambda * pos + pr.Lambda * neg
                                                                    : pr.Lambda * pos + pr.lambda * neg;
            }
            case OperatorKind::bellman_min: {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& w : weights_)
                    best = std::min(best, w[0] * dxx + w[1] * dyy + w[2] * dpp + w[3] * dpm);
                return best;
            }
        }
        return 0.0;
    }

    const ProblemInstance& prob_;
    Grid grid_;
    double eps_;
    double arg_cap_;
    double centre_ = 0.0;
    std::vector<Weights> weights_;
    std::vector<double> f_, fm_;
    double phase_width_ = 1.0;
};

namespace detail {

inline double boundary_sup(const ProblemInstance& prob, const Grid& grid) {
    double m = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid.is_boundary(k)) m = std::max(m, std::abs(prob.g(grid.point(k))));
    return m;
}

inline double resolve_eps(const ProblemInstance& prob, const Grid& grid, const SchemeConfig& cfg) {
    return cfg.eps_deg >= 0.0 ? cfg.eps_deg : 1e-4 * std::max(1.0, boundary_sup(prob, grid));
}

/// Transfinite (Coons) interpolation of the boundary data; exact for affine g.
inline DiscreteField boundary_lift(const ProblemInstance& prob, const Grid& grid) {
    DiscreteField u(grid);
    const int n = grid.n();
    if (grid.dim() == 1) {
        const double gl = prob.g({-1.0, 0.0}), gr = prob.g({1.0, 0.0});
        for (int i = 0; i < n; ++i) {
            const double s = 0.5 * (grid.coord(i) + 1.0);
            u[grid.index(i)] = (1 - s) * gl + s * gr;
        }
        return u;
    }
    const double c00 = prob.g({-1, -1}), c10 = prob.g({1, -1}), c01 = prob.g({-1, 1}), c11 = prob.g({1, 1});
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = grid.coord(i), y = grid.coord(j);
            const double s = 0.5 * (x + 1.0), t = 0.5 * (y + 1.0);
            const double v = (1 - s) * prob.g({-1.0, y}) + s * prob.g({1.0, y}) + (1 - t) * prob.g({x, -1.0}) +
                             t * prob.g({x, 1.0}) -
                             ((1 - s) * (1 - t) * c00 + s * (1 - t) * c10 + (1 - s) * t * c01 + s * t * c11);
            u[grid.index(i, j)] = v;
        }
    return u;
}

inline void clamp_boundary(const ProblemInstance& prob, DiscreteField& u) {
    const Grid& grid = u.grid();
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid.is_boundary(k)) u[k] = prob.g(grid.point(k));
}

inline std::vector<std::size_t> interior_nodes(const Grid& grid) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (!grid.is_boundary(k)) out.push_back(k);
    return out;
}

}  // namespace detail

/// R = sigma_{sgn u}(max(|grad_h u + q|, eps)) F_h(u) - f at interior nodes, 0 on the boundary.
inline DiscreteField residual(const DiscreteField& u, const ProblemInstance& prob, double eps_deg = 1e-4) {
    const Grid& grid = u.grid();
    Discretization disc(prob, grid, eps_deg);
    DiscreteField r(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_boundary(k)) continue;
        const auto nv = disc.evaluate(u.values(), k);
        r[k] = nv.sigma * nv.Fh - disc.source(k, u[k]);
    }
    return r;
}

namespace detail {

inline SolveResult relax(const ProblemInstance& prob, DiscreteField u, const SchemeConfig& cfg, double eps) {
    const Grid grid = u.grid();
    Discretization disc(prob, grid, eps);
    const auto interior = interior_nodes(grid);
    clamp_boundary(prob, u);

    SolveDiagnostics diag;
    diag.eps_deg = eps;
    std::vector<double> next = u.values();
    std::vector<double> res(grid.size(), 0.0), sig(grid.size(), 0.0), stiff(grid.size(), 0.0);
    const double centre = disc.centre_coefficient();
    double prev_res = std::numeric_limits<double>::infinity();
    int growth = 0;

    for (int it = 0; it <= cfg.max_iter; ++it) {
        double rmax = 0.0, smax = 0.0, stiff_max = 0.0;
        for (std::size_t k : interior) {
            const auto nv = disc.evaluate(u.values(), k);
            const double r = nv.sigma * nv.Fh - disc.source(k, u[k]);
            res[k] = r;
            sig[k] = nv.sigma;
            stiff[k] = std::abs(nv.Fh) * nv.dsigma + disc.source_slope(k, u[k]);
            stiff_max = std::max(stiff_max, stiff[k]);
            rmax = std::max(rmax, std::abs(r));
            smax = std::max(smax, nv.sigma);
        }
        diag.iterations = it;
        diag.final_residual = rmax;
        if (!std::isfinite(rmax)) throw SolverError("non-finite residual", diag);
        if (rmax <= cfg.tol_solve) {
            diag.converged = true;
            break;
        }
        if (it == cfg.max_iter) break;
        growth = rmax > prev_res ? growth + 1 : 0;
        prev_res = rmax;
        if (growth >= cfg.divergence_window)
            throw SolverError("residual grew over " + std::to_string(cfg.divergence_window) + " consecutive steps",
                              diag);

        const double s_ref = std::max(smax, std::numeric_limits<double>::min());
        const double dt_global = cfg.cfl / (centre * s_ref + stiff_max);
        double dt_min = std::numeric_limits<double>::infinity();
        for (std::size_t k : interior) {
            double dt = cfg.local_time_step
                            ? cfg.cfl / (centre * std::max(sig[k], cfg.sigma_floor * s_ref) + stiff[k])
                            : dt_global;
            if (cfg.dt > 0.0) dt = std::min(dt, cfg.dt);
            dt_min = std::min(dt_min, dt);
            next[k] = u[k] + dt * res[k];
        }
        diag.dt_used = dt_min;
        std::swap(u.values(), next);
    }
    diag.total_iterations = diag.iterations;
    diag.levels = {grid.n()};
    if (!u.all_finite()) throw SolverError("non-finite solution values", diag);
    return {std::move(u), diag};
}

}  // namespace detail

/// Fixed point of u <- u + dt R(u) with boundary clamped to g.
/// Throws SolverError on divergence; returns converged = false when max_iter
/// is exhausted.
inline SolveResult solve(const ProblemInstance& prob, const Grid& grid, const SchemeConfig& cfg = {}) {
    if (!(cfg.tol_solve > 0.0) || cfg.max_iter < 0 || !(cfg.cfl > 0.0 && cfg.cfl <= 1.0))
        throw ConfigError("scheme requires tol_solve > 0, max_iter >= 0, cfl in (0, 1]");
    const double eps = detail::resolve_eps(prob, grid, cfg);

    DiscreteField init = detail::boundary_lift(prob, grid);
    long coarse_iterations = 0;
    std::vector<int> levels;
    const int nc = (grid.n() + 1) / 2;
    if (cfg.nested && (grid.n() - 1) % 2 == 0 && nc >= Grid::kMinNodes) {
        SchemeConfig sub = cfg;
        sub.eps_deg = eps;
        try {
            const Grid coarse(grid.dim(), nc);
            auto cr = solve(prob, coarse, sub);
            coarse_iterations = cr.diagnostics.total_iterations;
            levels = cr.diagnostics.levels;
            for (std::size_t k = 0; k < grid.size(); ++k) init[k] = interpolate(cr.field, grid.point(k));
        } catch (const SolverError&) {
            // keep the boundary lift
        }
    }
    auto result = detail::relax(prob, std::move(init), cfg, eps);
    result.diagnostics.total_iterations += coarse_iterations;
    levels.push_back(grid.n());
    result.diagnostics.levels = levels;
    return result;
}

}  // namespace ftlab
