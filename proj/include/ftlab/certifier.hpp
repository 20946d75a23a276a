#pragma once

// Discrete viscosity inequalities by paraboloid touching.
//
//   certify_min:  min(s1(|q+p|) F(M), s2(|q+p|) F(M)) <= C0
//   certify_max:  max(s1(|q+p|) F(M), s2(|q+p|) F(M)) >= -C0
//
// for quadratics phi = u(x0) + p.(x - x0) + (x - x0)^T M (x - x0) / 2 touching
// u at a node. An upper bound on F is only meaningful for test functions
// touching from below (from above, arbitrarily large M touch), so the min
// inequality draws quadratics below u and the max inequality above u.
//
// The quadratics are not enumerated exhaustively. Each node contributes its
// finite-difference Taylor quadratic, shifted by -kappa I (or +kappa I) until
// it touches, plus rank-one Hessian and axis gradient perturbations of it
// that still touch. A reported violation is therefore a genuine failure of
// the discrete inequality, but passing does not prove the continuum one.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "grid.hpp"
#include "problem.hpp"
#include "sym_matrix.hpp"

namespace ftlab {

enum class TouchSide { above, below };

inline const char* to_string(TouchSide s) { return s == TouchSide::above ? "above" : "below"; }

struct TouchingTest {
    std::size_t center = 0;
    int rho_test = 3;
    std::array<double, 2> p{0.0, 0.0};
    SymMatrix M{1};
    TouchSide side = TouchSide::below;
};

struct CertifyOptions {
    int rho_test = 3;      // neighbourhood half-width in cells
    double eta_cert = -1;  // negative: 10 h
    double eta_touch = -1; // negative: h^2
    double eta_H = -1;     // negative: h
    double eta_g = -1;     // negative: h / 4
};

enum class InequalitySide { min, max };

inline const char* to_string(InequalitySide s) { return s == InequalitySide::min ? "min" : "max"; }

struct Violation {
    std::size_t index;
    InequalitySide side;
    /// Excess over C0 beyond eta_cert.
    double slack;
};

struct CertificateReport {
    InequalitySide side = InequalitySide::min;
    int checked_nodes = 0;
    std::vector<Violation> violations;  // sorted by index, worst per node
    /// Largest excess of the tested inequality over C0 (0 when none exceeds it).
    double max_violation = 0.0;
    double eta_cert = 0.0;
    bool pass = true;
};

namespace certify_detail {

struct Resolved {
    int rho;
    double eta_cert, eta_touch, eta_H, eta_g;
};

inline Resolved resolve(const CertifyOptions& o, double h) {
    if (o.rho_test < 1) throw DomainError("rho_test must be at least one cell");
    return {o.rho_test, o.eta_cert < 0 ? 10.0 * h : o.eta_cert, o.eta_touch < 0 ? h * h : o.eta_touch,
            o.eta_H < 0 ? h : o.eta_H, o.eta_g < 0 ? 0.25 * h : o.eta_g};
}

struct Offset {
    std::size_t idx;
    double dx, dy;
};

inline std::vector<Offset> neighbourhood(const Grid& g, std::size_t k, int rho) {
    std::vector<Offset> out;
    const int i0 = g.ix(k), j0 = g.jy(k), n = g.n();
    const int jlo = g.dim() == 1 ? 0 : std::max(0, j0 - rho);
    const int jhi = g.dim() == 1 ? 0 : std::min(n - 1, j0 + rho);
    for (int j = jlo; j <= jhi; ++j)
        for (int i = std::max(0, i0 - rho); i <= std::min(n - 1, i0 + rho); ++i) {
            if (i == i0 && j == j0) continue;
            out.push_back({g.index(i, j), (i - i0) * g.h(), (j - j0) * g.h()});
        }
    return out;
}

inline double quad_offset(const std::array<double, 2>& p, const SymMatrix& M, const Offset& o) {
    if (M.dim() == 1) return p[0] * o.dx + 0.5 * M(0, 0) * o.dx * o.dx;
    return p[0] * o.dx + p[1] * o.dy +
           0.5 * (M(0, 0) * o.dx * o.dx + 2.0 * M(0, 1) * o.dx * o.dy + M(1, 1) * o.dy * o.dy);
}

/// Whether phi stays on its side of u + / - eta_touch over the neighbourhood.
inline bool touches(const DiscreteField& u, std::size_t k, const std::vector<Offset>& nb,
                    const std::array<double, 2>& p, const SymMatrix& M, TouchSide side, double eta) {
    const double u0 = u[k];
    for (const auto& o : nb) {
        const double gap = u0 + quad_offset(p, M, o) - u[o.idx];
        if (side == TouchSide::below ? gap > eta : gap < -eta) return false;
    }
    return true;
}

}  // namespace certify_detail

/// Finite-difference Taylor quadratic at interior node k, shifted by a
/// multiple of the identity until it touches u from the requested side.
inline TouchingTest touching_test(const DiscreteField& u, std::size_t k, TouchSide side,
                                  const CertifyOptions& opts = {}) {
    using namespace certify_detail;
    const Grid& g = u.grid();
    if (g.is_boundary(k)) throw DomainError("touching tests need an interior node");
    const auto r = resolve(opts, g.h());
    const double h = g.h(), ih = 1.0 / h, ih2 = ih * ih;
    const int d = g.dim(), n = g.n();
    TouchingTest t;
    t.center = k;
    t.rho_test = r.rho;
    t.side = side;
    t.M = SymMatrix(d);
    t.p[0] = 0.5 * (u[k + 1] - u[k - 1]) * ih;
    t.M(0, 0) = (u[k + 1] - 2.0 * u[k] + u[k - 1]) * ih2;
    if (d == 2) {
        t.p[1] = 0.5 * (u[k + n] - u[k - n]) * ih;
        t.M(1, 1) = (u[k + n] - 2.0 * u[k] + u[k - n]) * ih2;
        t.M(0, 1) = 0.25 * (u[k + n + 1] - u[k + n - 1] - u[k - n + 1] + u[k - n - 1]) * ih2;
    }
    const auto nb = neighbourhood(g, k, r.rho);
    double kappa = 0.0;
    for (const auto& o : nb) {
        const double gap = u[k] + quad_offset(t.p, t.M, o) - u[o.idx];
        const double r2 = 0.5 * (o.dx * o.dx + o.dy * o.dy);
        if (side == TouchSide::below)
            kappa = std::max(kappa, (gap - r.eta_touch) / r2);
        else
            kappa = std::max(kappa, (-gap - r.eta_touch) / r2);
    }
    if (kappa > 0.0) {
        // a hair past the exact shift so rounding cannot undo the touch
        kappa *= 1.0 + 1e-12;
        t.M += SymMatrix::identity(d, side == TouchSide::below ? -kappa : kappa);
    }
    return t;
}

namespace certify_detail {

inline CertificateReport certify(const DiscreteField& u, const ProblemInstance& prob, InequalitySide ineq,
                                 const CertifyOptions& opts) {
    const Grid& g = u.grid();
    if (!u.all_finite()) throw DomainError("certification requires a finite field");
    const auto r = resolve(opts, g.h());
    const int d = g.dim();
    const TouchSide side = ineq == InequalitySide::min ? TouchSide::below : TouchSide::above;
    const double t_cap = std::min(prob.sigma_plus.t_max(), prob.sigma_minus.t_max());

    // The value of the combined inequality at (p, M), oriented so that larger
    // means worse: min(...) - C0 for the min side, -C0 - max(...) for the max side.
    auto excess = [&](const std::array<double, 2>& p, const SymMatrix& M) {
        const double gx = prob.q[0] + p[0], gy = d == 2 ? prob.q[1] + p[1] : 0.0;
        // gradients beyond the tabulated range are evaluated at its edge
        const double t = std::min(std::hypot(gx, gy), t_cap);
        const double Fm = prob.F(M);
        const double a = prob.sigma_plus.eval(t) * Fm, b = prob.sigma_minus.eval(t) * Fm;
        return ineq == InequalitySide::min ? std::min(a, b) - prob.C0 : -prob.C0 - std::max(a, b);
    };

    std::vector<std::array<double, 3>> dirs;
    if (d == 1) {
        dirs = {{1.0, 0.0, 0.0}};
    } else {
        const double s = std::sqrt(0.5);
        dirs = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {s, s, 0.0}, {s, -s, 0.0}};
    }

    CertificateReport rep;
    rep.side = ineq;
    rep.eta_cert = r.eta_cert;
    double worst_all = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.is_boundary(k)) continue;
        ++rep.checked_nodes;
        const auto base = touching_test(u, k, side, opts);
        const auto nb = neighbourhood(g, k, r.rho);
        double worst = excess(base.p, base.M);
        for (const auto& e : dirs)
            for (double sgn : {-1.0, 1.0}) {
                const SymMatrix M = base.M + (sgn * r.eta_H) * SymMatrix::outer(e, d);
                if (touches(u, k, nb, base.p, M, side, r.eta_touch)) worst = std::max(worst, excess(base.p, M));
            }
        for (int i = 0; i < d; ++i)
            for (double sgn : {-1.0, 1.0}) {
                auto p = base.p;
                p[i] += sgn * r.eta_g;
                if (touches(u, k, nb, p, base.M, side, r.eta_touch)) worst = std::max(worst, excess(p, base.M));
            }
        worst_all = std::max(worst_all, worst);
        if (worst > r.eta_cert) rep.violations.push_back({k, ineq, worst - r.eta_cert});
    }
    rep.max_violation = std::max(0.0, worst_all);
    rep.pass = rep.max_violation <= r.eta_cert;
    return rep;
}

}  // namespace certify_detail

inline CertificateReport certify_min(const DiscreteField& u, const ProblemInstance& prob,
                                     const CertifyOptions& opts = {}) {
    return certify_detail::certify(u, prob, InequalitySide::min, opts);
}

inline CertificateReport certify_max(const DiscreteField& u, const ProblemInstance& prob,
                                     const CertifyOptions& opts = {}) {
    return certify_detail::certify(u, prob, InequalitySide::max, opts);
}

}  // namespace ftlab
