#pragma once

// Pucci extremal operators and a small registry of uniformly elliptic F.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "sym_matrix.hpp"

namespace ftlab {

struct EllipticityPair {
    double lambda = 1.0;
    double Lambda = 1.0;

    EllipticityPair() = default;
    EllipticityPair(double lo, double hi) : lambda(lo), Lambda(hi) {
        if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
            throw ConfigError("ellipticity pair requires 0 < lambda <= Lambda");
    }
};

/// inf over A in A_{lambda,Lambda} of Tr(AM):
/// lambda * (positive eigenvalues) + Lambda * (negative eigenvalues).
inline double pucci_minus(const SymMatrix& m, const EllipticityPair& pair) {
    const auto ed = eigen(m);
    double s = 0.0;
    for (int k = 0; k < ed.dim; ++k) {
        const double e = ed.values[k];
        s += e > 0.0 ? pair.lambda * e : pair.Lambda * e;
    }
    return s;
}

/// -pucci_minus(-M): Lambda * (positive part) + lambda * (negative part).
inline double pucci_plus(const SymMatrix& m, const EllipticityPair& pair) {
    const auto ed = eigen(m);
    double s = 0.0;
    for (int k = 0; k < ed.dim; ++k) {
        const double e = ed.values[k];
        s += e > 0.0 ? pair.Lambda * e : pair.lambda * e;
    }
    return s;
}

/// The class member attaining pucci_minus: lambda on the nonnegative
/// eigenspace of M, Lambda on the negative one.
inline SymMatrix pucci_minus_minimizer(const SymMatrix& m, const EllipticityPair& pair) {
    const auto ed = eigen(m);
    SymMatrix a(m.dim());
    for (int k = 0; k < ed.dim; ++k) {
        const double w = ed.values[k] >= 0.0 ? pair.lambda : pair.Lambda;
        a += w * SymMatrix::outer(ed.vectors[k], m.dim());
    }
    return a;
}

/// Whether every eigenvalue of A lies in [lambda, Lambda] up to tol.
inline bool in_ellipticity_class(const SymMatrix& a, const EllipticityPair& pair, double tol = 1e-12) {
    const auto ed = eigen(a);
    const double slack = tol * std::max(1.0, pair.Lambda);
    for (int k = 0; k < ed.dim; ++k)
        if (ed.values[k] < pair.lambda - slack || ed.values[k] > pair.Lambda + slack) return false;
    return true;
}

/// Q^T diag(u) Q with Q a uniform rotation and u uniform in [lambda, Lambda].
template <class Rng>
SymMatrix sample_class_member(int dim, const EllipticityPair& pair, Rng& rng) {
    std::uniform_real_distribution<double> u(pair.lambda, pair.Lambda);
    const auto q = random_rotation(dim, rng);
    SymMatrix a(dim);
    for (int k = 0; k < dim; ++k) a += u(rng) * SymMatrix::outer(q[k], dim);
    return a;
}

enum class OperatorKind { trace, pucci_minus, pucci_plus, bellman_min };

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::trace: return "trace";
        case OperatorKind::pucci_minus: return "pucci-minus";
        case OperatorKind::pucci_plus: return "pucci-plus";
        default: return "bellman-min";
    }
}

/// A (lambda, Lambda)-elliptic operator with F(0) = 0.
class EllipticOperator {
   public:
    /// Tr(M) is (1,1)-elliptic, so the pair must bracket 1.
    static EllipticOperator trace(EllipticityPair pair = {}) {
        if (pair.lambda > 1.0 || pair.Lambda < 1.0)
            throw ConfigError("trace operator requires lambda <= 1 <= Lambda");
        return EllipticOperator(OperatorKind::trace, pair, {});
    }
    static EllipticOperator pucci_minus(EllipticityPair pair) {
        return EllipticOperator(OperatorKind::pucci_minus, pair, {});
    }
    static EllipticOperator pucci_plus(EllipticityPair pair) {
        return EllipticOperator(OperatorKind::pucci_plus, pair, {});
    }
    /// min_i Tr(A_i M); every A_i must belong to A_{lambda,Lambda}.
    static EllipticOperator bellman_min(EllipticityPair pair, std::vector<SymMatrix> coefficients) {
        if (coefficients.empty()) throw ConfigError("bellman-min needs at least one coefficient matrix");
        const int d = coefficients.front().dim();
        for (const auto& a : coefficients) {
            if (a.dim() != d) throw ConfigError("bellman-min coefficients have mixed dimensions");
            if (!in_ellipticity_class(a, pair))
                throw ConfigError("bellman-min coefficient outside the ellipticity class");
        }
        return EllipticOperator(OperatorKind::bellman_min, pair, std::move(coefficients));
    }

    OperatorKind kind() const { return kind_; }
    const EllipticityPair& pair() const { return pair_; }
    const std::vector<SymMatrix>& coefficients() const { return coefficients_; }
    /// Dimension fixed by the coefficients, 0 when the operator is dimension-free.
    int fixed_dim() const { return coefficients_.empty() ? 0 : coefficients_.front().dim(); }

    double operator()(const SymMatrix& m) const { return apply(m); }

    double apply(const SymMatrix& m) const {
        switch (kind_) {
            case OperatorKind::trace: return m.trace();
            case OperatorKind::pucci_minus: return ftlab::pucci_minus(m, pair_);
            case OperatorKind::pucci_plus: return ftlab::pucci_plus(m, pair_);
            case OperatorKind::bellman_min: {
                double best = trace_product(coefficients_.front(), m);
                for (std::size_t i = 1; i < coefficients_.size(); ++i)
                    best = std::min(best, trace_product(coefficients_[i], m));
                return best;
            }
        }
        throw InternalError("unknown operator kind");
    }

   private:
    EllipticOperator(OperatorKind kind, EllipticityPair pair, std::vector<SymMatrix> coeffs)
        : kind_(kind), pair_(pair), coefficients_(std::move(coeffs)) {}

    OperatorKind kind_;
    EllipticityPair pair_;
    std::vector<SymMatrix> coefficients_;
};

struct EllipticityCounterexample {
    SymMatrix m, n;
    double lower, difference, upper;
};

struct EllipticityReport {
    bool pass = true;
    int samples = 0;
    std::optional<EllipticityCounterexample> counterexample;
};

/// Samples pairs (M, N) and checks
///   M^-(M - N) <= F(M) - F(N) <= M^+(M - N)
/// with 1e-9 absolute slack. Stops at the first counterexample.
inline EllipticityReport check_ellipticity(const EllipticOperator& op, int samples, std::uint64_t seed,
                                           int dim = 2) {
    if (samples < 1) throw DomainError("check_ellipticity requires samples >= 1");
    if (op.fixed_dim() != 0) dim = op.fixed_dim();
    constexpr double kSlack = 1e-9;
    std::mt19937_64 rng(seed);
    EllipticityReport rep;
    for (int s = 0; s < samples; ++s) {
        const SymMatrix m = random_sym_matrix(dim, rng);
        const SymMatrix n = random_sym_matrix(dim, rng);
        const SymMatrix diff = m - n;
        const double lo = pucci_minus(diff, op.pair());
        const double hi = pucci_plus(diff, op.pair());
        const double df = op(m) - op(n);
        ++rep.samples;
        if (df < lo - kSlack || df > hi + kSlack) {
            rep.pass = false;
            rep.counterexample = EllipticityCounterexample{m, n, lo, df, hi};
            break;
        }
    }
    return rep;
}

}  // namespace ftlab
