#pragma once

// Degeneracy laws sigma: monotone rates multiplying the elliptic operator,
// with inverses and a computational Dini test on their dyadic sums.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace ftlab {

class DegeneracyLaw;

namespace law {

/// sigma(t) = t^p
struct Power {
    double p;
};

/// sigma(t) = t^p * (1 + ln(1 + 1/t))^(-q); monotone when p > 0 and p + q > 0.
struct PowerLog {
    double p;
    double q;
};

/// sigma(t) = exp(1 - 1/t). Vanishes faster than any power at 0, so its
/// inverse 1/(1 - ln s) is not a Dini modulus.
struct ExponentialFlat {};

/// Piecewise-linear interpolation through (0, 0) and the given breakpoints.
struct Tabulated {
    std::vector<std::pair<double, double>> points;
};

/// sigma(t) = amplitude * base(stretch * t); the form taken by the rescaled
/// laws of the scale cascade.
struct Scaled {
    std::shared_ptr<const DegeneracyLaw> base;
    double amplitude;
    double stretch;
};

}  // namespace law

/// A strictly increasing rate sigma on (0, T_max] with sigma(0) = 0.
///
/// Inverses and the Dini test work in the logarithmic domain, so terms such
/// as sigma^{-1}(theta^k) remain representable for k in the hundreds.
class DegeneracyLaw {
   public:
    using Family = std::variant<law::Power, law::PowerLog, law::ExponentialFlat, law::Tabulated,
                                law::Scaled>;

    static constexpr double kDefaultTMax = 10.0;
    /// eval returns 0 below this argument.
    static constexpr double kZeroCutoff = 1e-300;
    static constexpr int kBisectionMaxIter = 200;
    static constexpr double kBisectionRelTol = 1e-10;

    static DegeneracyLaw power(double p, double t_max = kDefaultTMax) {
        if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("power law requires p > 0");
        return DegeneracyLaw(law::Power{p}, t_max);
    }

    static DegeneracyLaw power_log(double p, double q, double t_max = kDefaultTMax) {
        if (!(p > 0.0) || !std::isfinite(q) || !(p + q > 0.0))
            throw ConfigError("power-log law requires p > 0 and p + q > 0");
        return DegeneracyLaw(law::PowerLog{p, q}, t_max);
    }

    static DegeneracyLaw exponential_flat(double t_max = kDefaultTMax) {
        return DegeneracyLaw(law::ExponentialFlat{}, t_max);
    }

    /// Rejects tables that are not strictly increasing in both coordinates.
    static DegeneracyLaw tabulated(std::vector<std::pair<double, double>> points) {
        if (points.empty()) throw ConfigError("tabulated law needs at least one breakpoint");
        double prev_t = 0.0, prev_s = 0.0;
        for (const auto& [t, s] : points) {
            if (!std::isfinite(t) || !std::isfinite(s) || !(t > prev_t) || !(s > prev_s))
                throw ConfigError("tabulated law must be strictly increasing with positive entries");
            prev_t = t;
            prev_s = s;
        }
        const double t_max = points.back().first;
        return DegeneracyLaw(law::Tabulated{std::move(points)}, t_max);
    }

    /// t -> amplitude * base(stretch * t), evaluable on (0, base.T_max / stretch].
    static DegeneracyLaw scaled(const DegeneracyLaw& base, double amplitude, double stretch) {
        if (!(amplitude > 0.0) || !(stretch > 0.0) || !std::isfinite(amplitude) ||
            !std::isfinite(stretch))
            throw ConfigError("scaled law requires positive finite amplitude and stretch");
        return DegeneracyLaw(
            law::Scaled{std::make_shared<const DegeneracyLaw>(base), amplitude, stretch},
            base.t_max() / stretch);
    }

    const Family& family() const { return family_; }
    double t_max() const { return t_max_; }
    double s_max() const { return eval(t_max_); }

    double eval(double t) const {
        if (!(t >= 0.0)) throw DomainError("degeneracy law evaluated at negative or NaN argument");
        if (t > t_max_ * (1.0 + 1e-12)) throw DomainError("degeneracy law evaluated beyond T_max");
        if (t < kZeroCutoff) return 0.0;
        return eval_unchecked(t);
    }

    /// ln sigma(e^{log_t}); defined for arbitrarily negative log_t.
    double log_eval(double log_t) const {
        if (std::isnan(log_t)) throw DomainError("log_eval at NaN");
        if (log_t > std::log(t_max_) + 1e-12) throw DomainError("degeneracy law evaluated beyond T_max");
        return log_eval_unchecked(log_t);
    }

    double inverse(double s) const {
        if (!(s >= 0.0)) throw DomainError("inverse of a negative or NaN value");
        if (s == 0.0) return 0.0;
        if (s > s_max() * (1.0 + 1e-12)) throw DomainError("inverse requested beyond sigma(T_max)");
        return std::exp(log_inverse(std::log(s)));
    }

    /// ln sigma^{-1}(e^{log_s}). Closed form where one exists, geometric
    /// bisection on ln t otherwise.
    double log_inverse(double log_s) const {
        if (std::isnan(log_s)) throw DomainError("log_inverse at NaN");
        if (log_s > std::log(s_max()) + 1e-12) throw DomainError("inverse requested beyond sigma(T_max)");
        if (const auto* pw = std::get_if<law::Power>(&family_)) return log_s / pw->p;
        if (std::holds_alternative<law::ExponentialFlat>(family_)) return -std::log1p(-log_s);
        return bisect_log_inverse(log_s);
    }

    /// t sigma'(t) / sigma(t), the local power-law exponent; 0 where sigma vanishes.
    double elasticity(double t) const {
        if (!(t > 0.0)) return 0.0;
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, law::Power>) {
                    return f.p;
                } else if constexpr (std::is_same_v<T, law::PowerLog>) {
                    return f.p + f.q / ((1.0 + std::log1p(1.0 / t)) * (1.0 + t));
                } else if constexpr (std::is_same_v<T, law::ExponentialFlat>) {
                    return 1.0 / t;
                } else if constexpr (std::is_same_v<T, law::Tabulated>) {
                    auto it = std::lower_bound(f.points.begin(), f.points.end(), t,
                                               [](const auto& pt, double v) { return pt.first < v; });
                    if (it == f.points.end()) return 0.0;
                    double t0 = 0.0, s0 = 0.0;
                    if (it != f.points.begin()) {
                        t0 = std::prev(it)->first;
                        s0 = std::prev(it)->second;
                    }
                    const double slope = (it->second - s0) / (it->first - t0);
                    const double s = s0 + slope * (t - t0);
                    return s > 0.0 ? slope * t / s : 0.0;
                } else {
                    return f.base->elasticity(f.stretch * t);
                }
            },
            family_);
    }

    bool closed_form_inverse() const {
        return std::holds_alternative<law::Power>(family_) ||
               std::holds_alternative<law::ExponentialFlat>(family_);
    }

    std::string describe() const {
        std::ostringstream os;
        std::visit(
            [&](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, law::Power>)
                    os << "power(p=" << f.p << ")";
                else if constexpr (std::is_same_v<T, law::PowerLog>)
                    os << "power-log(p=" << f.p << ",q=" << f.q << ")";
                else if constexpr (std::is_same_v<T, law::ExponentialFlat>)
                    os << "exponential-flat";
                else if constexpr (std::is_same_v<T, law::Tabulated>)
                    os << "tabulated(" << f.points.size() << " points)";
                else
                    os << f.amplitude << "*" << f.base->describe() << "(" << f.stretch << "t)";
            },
            family_);
        return os.str();
    }

   private:
    DegeneracyLaw(Family family, double t_max) : family_(std::move(family)), t_max_(t_max) {
        if (!(t_max_ > 0.0) || !std::isfinite(t_max_)) throw ConfigError("T_max must be positive");
    }

    double eval_unchecked(double t) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, law::Power>) {
                    if (f.p == 1.0) return t;
                    if (f.p == 2.0) return t * t;
                    return std::pow(t, f.p);
                } else if constexpr (std::is_same_v<T, law::PowerLog>) {
                    return std::pow(t, f.p) * std::pow(1.0 + std::log1p(1.0 / t), -f.q);
                } else if constexpr (std::is_same_v<T, law::ExponentialFlat>) {
                    return std::exp(1.0 - 1.0 / t);
                } else if constexpr (std::is_same_v<T, law::Tabulated>) {
                    return interpolate(f.points, t);
                } else {
                    const double arg = f.stretch * t;
                    return arg < kZeroCutoff ? 0.0 : f.amplitude * f.base->eval_unchecked(arg);
                }
            },
            family_);
    }

    double log_eval_unchecked(double log_t) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, law::Power>) {
                    return f.p * log_t;
                } else if constexpr (std::is_same_v<T, law::PowerLog>) {
                    // ln(1 + 1/t) without overflowing 1/t
                    const double l = log_t < -30.0 ? -log_t + std::exp(log_t)
                                                   : std::log1p(std::exp(-log_t));
                    return f.p * log_t - f.q * std::log1p(l);
                } else if constexpr (std::is_same_v<T, law::ExponentialFlat>) {
                    return 1.0 - std::exp(-log_t);
                } else if constexpr (std::is_same_v<T, law::Tabulated>) {
                    const auto& [t1, s1] = f.points.front();
                    if (log_t <= std::log(t1)) return std::log(s1 / t1) + log_t;
                    return std::log(interpolate(f.points, std::exp(log_t)));
                } else {
                    return std::log(f.amplitude) +
                           f.base->log_eval_unchecked(std::log(f.stretch) + log_t);
                }
            },
            family_);
    }

    static double interpolate(const std::vector<std::pair<double, double>>& pts, double t) {
        auto it = std::lower_bound(pts.begin(), pts.end(), t,
                                   [](const auto& pt, double v) { return pt.first < v; });
        if (it == pts.end()) return pts.back().second;
        const double t1 = it->first, s1 = it->second;
        double t0 = 0.0, s0 = 0.0;
        if (it != pts.begin()) {
            t0 = std::prev(it)->first;
            s0 = std::prev(it)->second;
        }
        return s0 + (s1 - s0) * (t - t0) / (t1 - t0);
    }

    double bisect_log_inverse(double log_s) const {
        double lo = -2000.0;
        double hi = std::log(t_max_);
        if (log_eval_unchecked(lo) >= log_s) return lo;
        if (log_eval_unchecked(hi) <= log_s) return hi;
        for (int it = 0; it < kBisectionMaxIter; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (log_eval_unchecked(mid) < log_s)
                lo = mid;
            else
                hi = mid;
            // hi - lo bounds the relative error of t = e^mid
            if (hi - lo <= kBisectionRelTol) return 0.5 * (lo + hi);
        }
        throw NumericError("bisection for sigma^{-1} did not converge");
    }

    Family family_;
    double t_max_;
};

enum class DiniVerdict { dini, not_dini, inconclusive };

inline const char* to_string(DiniVerdict v) {
    switch (v) {
        case DiniVerdict::dini: return "dini";
        case DiniVerdict::not_dini: return "not-dini";
        default: return "inconclusive";
    }
}

struct DiniReport {
    double theta = 0.0;
    std::vector<double> partial_sums;
    DiniVerdict verdict = DiniVerdict::inconclusive;
    /// Geometric tail estimate sum_{k>K} sigma^{-1}(theta^k); +inf unless dini.
    double tail_estimate = std::numeric_limits<double>::infinity();
    /// Largest consecutive-term ratio on the probed tail.
    double tail_ratio = std::numeric_limits<double>::quiet_NaN();
};

namespace dini {

/// A tail is geometrically dominated when every consecutive ratio is at most this.
inline constexpr double kGeometricRatioMax = 0.95;
/// Shortest K for which a tail is probed at all.
inline constexpr int kMinProbe = 4;

/// ln sigma^{-1}(theta^k) for k = 1..K.
inline std::vector<double> log_terms(const DegeneracyLaw& law, double theta, int K) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(K, 0)));
    const double log_theta = std::log(theta);
    for (int k = 1; k <= K; ++k) out.push_back(law.log_inverse(k * log_theta));
    return out;
}

/// Classifies a positive sequence given by its logarithms. The probed tail is
/// the second half of the list.
///   dini:      all tail ratios <= kGeometricRatioMax (geometric domination);
///   not-dini:  k*b_k does not decay across the tail and the ratios increase
///              toward 1 (harmonic lower bound, sub-geometric decay);
///   otherwise inconclusive.
inline void classify(const std::vector<double>& log_b, DiniReport& rep) {
    const int K = static_cast<int>(log_b.size());
    if (K < kMinProbe) return;
    const int start = K / 2;  // 0-based index of term k = K/2 + 1
    double rho = 0.0;
    for (int i = start; i + 1 < K; ++i) rho = std::max(rho, std::exp(log_b[i + 1] - log_b[i]));
    rep.tail_ratio = rho;
    if (rho <= kGeometricRatioMax) {
        rep.verdict = DiniVerdict::dini;
        rep.tail_estimate = std::exp(log_b.back()) * rho / (1.0 - rho);
        return;
    }
    const double log_h_first = std::log(static_cast<double>(start + 1)) + log_b[start];
    const double log_h_last = std::log(static_cast<double>(K)) + log_b.back();
    const double ratio_first = std::exp(log_b[start + 1] - log_b[start]);
    const double ratio_last = std::exp(log_b[K - 1] - log_b[K - 2]);
    if (log_h_last >= log_h_first && ratio_last > ratio_first) rep.verdict = DiniVerdict::not_dini;
}

}  // namespace dini

/// Partial sums S_K = sum_{k<=K} sigma^{-1}(theta^k) with a Dini verdict.
inline DiniReport dini_sum(const DegeneracyLaw& law, double theta, int K) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("dini_sum requires theta in (0,1)");
    if (K < 1) throw DomainError("dini_sum requires K >= 1");
    DiniReport rep;
    rep.theta = theta;
    const auto log_b = dini::log_terms(law, theta, K);
    double s = 0.0;
    rep.partial_sums.reserve(log_b.size());
    for (double lb : log_b) {
        s += std::exp(lb);
        rep.partial_sums.push_back(s);
    }
    dini::classify(log_b, rep);
    return rep;
}

/// a_k = max(sigma_1^{-1}(theta^k), sigma_2^{-1}(theta^k)), k = 1..K.
inline std::vector<double> a_sequence(const DegeneracyLaw& law1, const DegeneracyLaw& law2,
                                      double theta, int K) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("a_sequence requires theta in (0,1)");
    if (K < 0) throw DomainError("a_sequence requires K >= 0");
    std::vector<double> a;
    a.reserve(static_cast<std::size_t>(K));
    const double log_theta = std::log(theta);
    for (int k = 1; k <= K; ++k) {
        const double lg = std::max(law1.log_inverse(k * log_theta), law2.log_inverse(k * log_theta));
        const double v = std::exp(lg);
        if (!(v > 0.0))
            throw NumericError("a_k underflows at k = " + std::to_string(k) +
                               "; lower K or raise theta");
        a.push_back(v);
    }
    return a;
}

}  // namespace ftlab
