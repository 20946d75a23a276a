#pragma once

// Problem instances sigma_{sgn u}(|q + Du|) F(D^2 u) = f with Dirichlet data,
// and the closed-form benchmarks used to verify the solver.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "degeneracy.hpp"
#include "elliptic.hpp"
#include "errors.hpp"
#include "grid.hpp"

namespace ftlab {

using ScalarFn = std::function<double(const Point&)>;

struct ProblemInstance {
    EllipticOperator F = EllipticOperator::trace();
    DegeneracyLaw sigma_plus = DegeneracyLaw::power(1.0);   // where u > 0
    DegeneracyLaw sigma_minus = DegeneracyLaw::power(1.0);  // where u < 0
    ScalarFn f;
    ScalarFn g;
    double C0 = 0.0;
    Point q{0.0, 0.0};
    /// When set, the source switches with the phase like sigma does: f where
    /// u > 0, f_minus where u < 0.
    ScalarFn f_minus{};
};

/// Degeneracy factor at a node: sign-dispatched, with the pointwise smaller
/// law where u vanishes exactly.
inline double sigma_at(const ProblemInstance& prob, double u, double t) {
    if (u > 0.0) return prob.sigma_plus.eval(t);
    if (u < 0.0) return prob.sigma_minus.eval(t);
    return std::min(prob.sigma_plus.eval(t), prob.sigma_minus.eval(t));
}

enum class BenchmarkName { affine, radial_power, transmission_1d };

struct BenchmarkParams {
    // affine
    double a = 0.0;
    Point b{1.0, 0.0};
    // radial-power
    double theta = 1.0;
    int dim = 2;
    // transmission-1d
    double theta1 = 1.0;
    double theta2 = 2.0;
    double c = 1.0;
};

/// Exact solution together with the matching source and boundary data.
struct Benchmark {
    BenchmarkName name;
    int dim;
    ScalarFn exact;
    ScalarFn f;
    ScalarFn g;
    DegeneracyLaw sigma_plus;
    DegeneracyLaw sigma_minus;
    double f_sup;  // ||f||_inf
    ScalarFn f_minus{};  // phase-dispatched source of the negative phase, if any

    ProblemInstance problem(EllipticOperator F = EllipticOperator::trace()) const {
        return ProblemInstance{std::move(F), sigma_plus, sigma_minus, f, g, f_sup, {0.0, 0.0}, f_minus};
    }
};

namespace bench {

/// Exponent of the radial profile |x|^gamma solving |Du|^theta Delta u = const.
inline double radial_gamma(double theta) { return (2.0 + theta) / (1.0 + theta); }

/// gamma^{1+theta} (gamma + d - 2): the constant source of |x|^gamma.
inline double radial_source(double theta, int dim) {
    const double g = radial_gamma(theta);
    return std::pow(g, 1.0 + theta) * (g + dim - 2.0);
}

/// kappa = ((1+theta) c)^{1/(1+theta)} (1+theta)/(2+theta).
inline double transmission_kappa(double theta, double c) {
    return std::pow((1.0 + theta) * c, 1.0 / (1.0 + theta)) * (1.0 + theta) / (2.0 + theta);
}

inline double norm(const Point& x, int dim) {
    return dim == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
}

}  // namespace bench

inline Benchmark exact_benchmark(BenchmarkName name, const BenchmarkParams& p = {}) {
    switch (name) {
        case BenchmarkName::affine: {
            const double a = p.a;
            const Point b = p.b;
            const int d = p.dim;
            ScalarFn u = [a, b, d](const Point& x) { return a + b[0] * x[0] + (d == 2 ? b[1] * x[1] : 0.0); };
            ScalarFn zero = [](const Point&) { return 0.0; };
            return Benchmark{name, d, u, zero, u, DegeneracyLaw::power(1.0), DegeneracyLaw::power(1.0), 0.0};
        }
        case BenchmarkName::radial_power: {
            if (!(p.theta > 0.0)) throw ConfigError("radial-power requires theta > 0");
            if (p.dim != 1 && p.dim != 2) throw ConfigError("radial-power requires d in {1, 2}");
            const double gamma = bench::radial_gamma(p.theta);
            const double src = bench::radial_source(p.theta, p.dim);
            const int d = p.dim;
            ScalarFn u = [gamma, d](const Point& x) { return std::pow(bench::norm(x, d), gamma); };
            ScalarFn f = [src](const Point&) { return src; };
            return Benchmark{name, d, u, f, u, DegeneracyLaw::power(p.theta), DegeneracyLaw::power(p.theta),
                             src};
        }
        case BenchmarkName::transmission_1d: {
            if (!(p.theta1 > 0.0) || !(p.theta2 > 0.0) || !(p.c > 0.0))
                throw ConfigError("transmission-1d requires theta1, theta2, c > 0");
            const double g1 = bench::radial_gamma(p.theta1), g2 = bench::radial_gamma(p.theta2);
            const double k1 = bench::transmission_kappa(p.theta1, p.c);
            const double k2 = bench::transmission_kappa(p.theta2, p.c);
            const double c = p.c;
            ScalarFn u = [=](const Point& x) {
                return x[0] >= 0.0 ? k1 * std::pow(x[0], g1) : -k2 * std::pow(-x[0], g2);
            };
            // The concave negative branch carries source -c. The source follows
            // the phase of u: with f = c sgn(x) instead, the problem also admits a
            // C^1 solution whose zero sits right of the origin.
            ScalarFn fp = [c](const Point&) { return c; };
            ScalarFn fm = [c](const Point&) { return -c; };
            return Benchmark{name, 1, u, fp, u, DegeneracyLaw::power(p.theta1), DegeneracyLaw::power(p.theta2),
                             c, fm};
        }
    }
    throw ConfigError("unknown benchmark");
}

inline BenchmarkName parse_benchmark_name(const std::string& s) {
    if (s == "affine") return BenchmarkName::affine;
    if (s == "radial-power") return BenchmarkName::radial_power;
    if (s == "transmission-1d") return BenchmarkName::transmission_1d;
    throw ConfigError("unknown benchmark name: " + s);
}

inline const char* to_string(BenchmarkName n) {
    switch (n) {
        case BenchmarkName::affine: return "affine";
        case BenchmarkName::radial_power: return "radial-power";
        default: return "transmission-1d";
    }
}

}  // namespace ftlab
