#pragma once

// Scale selection, l1 rescaling, the mu* recursion and the modulus
// omega(t) = sum_{i >= floor(1/t)} tau_i.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "degeneracy.hpp"
#include "errors.hpp"

namespace ftlab {

struct ScaleSchedule {
    double C = 1.0;
    double alpha0 = 0.5;
    double r = 0.0;
    double mu1 = 0.0;
    double theta = 0.0;
    /// C was raised to 1/2.
    bool clamped = false;
};

/// r = min((4C)^{-1/alpha0}, 1/16), mu1 = 2 C r^{alpha0}, theta = r / mu1.
inline ScaleSchedule choose_scale(double C, double alpha0) {
    if (!(alpha0 > 0.0 && alpha0 <= 1.0) || !std::isfinite(C) || !(C > 0.0))
        throw ConfigError("choose_scale requires C > 0 and alpha0 in (0, 1]");
    ScaleSchedule s;
    s.alpha0 = alpha0;
    s.clamped = C < 0.5;
    s.C = std::max(C, 0.5);
    s.r = std::min(std::pow(4.0 * s.C, -1.0 / alpha0), 1.0 / 16.0);
    s.mu1 = 2.0 * s.C * std::pow(s.r, alpha0);
    s.theta = s.r / s.mu1;
    if (!(s.r < s.mu1 && s.mu1 < 1.0 && s.theta > 0.0 && s.theta < 1.0))
        throw ConfigError("scale schedule violates r < mu1 < 1");
    return s;
}

struct RescaleParams {
    double delta;
    double eps;

    explicit RescaleParams(double d) : delta(d), eps(1.0 / (1.0 + d)) {
        if (!(d > 0.0 && d < 0.25)) throw ConfigError("rescale requires delta in (0, 1/4)");
    }
};

namespace modulus_detail {

inline constexpr double kTailRatioMax = 0.95;

/// Largest consecutive ratio over the second half of a positive list.
inline double tail_ratio(const std::vector<double>& b) {
    const std::size_t K = b.size();
    double rho = 0.0;
    for (std::size_t i = K / 2; i + 1 < K; ++i) rho = std::max(rho, b[i + 1] / b[i]);
    return rho;
}

inline double l1(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
}

}  // namespace modulus_detail

/// c_j = min(s * ct_j, 1/eps), ct_j = max(sqrt(R_j / R_1), ct_{j-1} / 2) with
/// R_j the tail sums, and s chosen so that ||a / c|| = eps (1 + delta/4) ||a||.
inline std::vector<double> rescale_sequence(const std::vector<double>& a, const RescaleParams& params) {
    using namespace modulus_detail;
    if (a.empty()) throw DomainError("rescale_sequence needs a nonempty sequence");
    for (double v : a)
        if (!std::isfinite(v) || v < 0.0) throw DomainError("rescale_sequence needs finite nonnegative terms");
    const double norm = l1(a);
    if (!(norm > 0.0)) throw DomainError("rescale_sequence needs a nonzero sequence");
    if (a.size() >= 8) {
        const std::size_t start = 3 * a.size() / 4;
        for (std::size_t i = start; i + 1 < a.size(); ++i)
            if (a[i] > 0.0 && a[i + 1] > kTailRatioMax * a[i])
                throw TailError("sequence tail is not geometrically summable; raise K or check the law");
    }

    const std::size_t K = a.size();
    std::vector<double> R(K);
    double acc = 0.0;
    for (std::size_t j = K; j-- > 0;) {
        acc += a[j];
        R[j] = acc;
    }
    std::vector<double> ct(K);
    for (std::size_t j = 0; j < K; ++j) {
        ct[j] = std::sqrt(R[j] / R[0]);
        if (j > 0) ct[j] = std::max(ct[j], 0.5 * ct[j - 1]);
    }

    const double cap = 1.0 / params.eps;
    const double target = params.eps * (1.0 + 0.25 * params.delta) * norm;
    auto ratio_norm = [&](double s) {
        double t = 0.0;
        for (std::size_t j = 0; j < K; ++j) t += a[j] / std::min(s * ct[j], cap);
        return t;
    };
    // ||a / c|| decreases in s, from +inf to eps ||a|| < target.
    double lo = 1.0, hi = 1.0;
    while (ratio_norm(lo) < target) lo *= 0.5;
    while (ratio_norm(hi) > target) {
        hi *= 2.0;
        if (hi > 1e300) throw InternalError("rescale_sequence could not bracket the scale factor");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ratio_norm(mid) > target ? lo : hi) = mid;
    }
    std::vector<double> c(K);
    for (std::size_t j = 0; j < K; ++j) c[j] = std::min(hi * ct[j], cap);
    const double got = ratio_norm(hi);
    if (got < params.eps * (1.0 - 0.5 * params.delta) * norm || got > params.eps * (1.0 + params.delta) * norm)
        throw InternalError("rescale_sequence missed the target window");
    return c;
}

enum class MuBranch { equality, root };

struct SequenceTable {
    int K = 0;
    std::vector<double> a, c, mu1, mu2, mu_star, tau;
    /// Per row and law, which rule produced mu_k^i.
    std::vector<MuBranch> branch1, branch2;
    ScaleSchedule schedule;
    /// ln tau_k, kept because tau underflows long before its logarithm does.
    std::vector<double> log_tau;

    bool else_branch(std::size_t k) const {
        return branch1[k] == MuBranch::root || branch2[k] == MuBranch::root;
    }
};

namespace modulus_detail {

/// ln of (mu P / r^k) sigma(mu P c) with ln P = log_p.
inline double log_condition(const DegeneracyLaw& law, double mu, double log_p, int k, double log_r, double c) {
    const double lt = std::log(mu) + log_p;
    const double ls = law.log_eval(lt + std::log(c));
    return lt - k * log_r + ls;
}

inline constexpr int kMuMaxIter = 200;
inline constexpr double kMuTol = 1e-12;

/// mu_k^i for k >= 2 given mu*_{k-1} and ln tau_{k-1}.
inline double next_mu(const DegeneracyLaw& law, double prev, double log_p, int k, double log_r, double c,
                      MuBranch& branch) {
    if (log_condition(law, prev, log_p, k, log_r, c) >= 0.0) {
        branch = MuBranch::equality;
        return prev;
    }
    branch = MuBranch::root;
    // the condition is increasing in mu, below 1 at mu*_{k-1}
    double lo = prev, hi = 1.0;
    if (log_condition(law, hi, log_p, k, log_r, c) < 0.0)
        throw InternalError("mu recursion: no root below 1 at k = " + std::to_string(k));
    for (int it = 0; it < kMuMaxIter && hi - lo > kMuTol; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_condition(law, mid, log_p, k, log_r, c) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace modulus_detail

/// mu*_1 = mu1; for k >= 2 and each law, mu_k^i = mu*_{k-1} when
/// (mu*_{k-1} tau_{k-1} / r^k) sigma_i(mu*_{k-1} tau_{k-1} c_k) >= 1, otherwise
/// the root in (mu*_{k-1}, 1) of the same expression = 1. tau_k = tau_{k-1} mu*_k.
inline SequenceTable mu_recursion(const ScaleSchedule& sched, const DegeneracyLaw& law1, const DegeneracyLaw& law2,
                                  const std::vector<double>& a, const std::vector<double>& c, int K) {
    using namespace modulus_detail;
    if (K < 1) throw ConfigError("mu_recursion requires K >= 1");
    if (c.size() < static_cast<std::size_t>(K) || a.size() < static_cast<std::size_t>(K))
        throw DomainError("mu_recursion needs K entries of a and c");
    SequenceTable t;
    t.K = K;
    t.schedule = sched;
    t.a.assign(a.begin(), a.begin() + K);
    t.c.assign(c.begin(), c.begin() + K);
    const double log_r = std::log(sched.r);
    double log_tau = std::log(sched.mu1);
    t.mu1.push_back(sched.mu1);
    t.mu2.push_back(sched.mu1);
    t.mu_star.push_back(sched.mu1);
    t.branch1.push_back(MuBranch::equality);
    t.branch2.push_back(MuBranch::equality);
    t.log_tau.push_back(log_tau);
    for (int k = 2; k <= K; ++k) {
        const double prev = t.mu_star.back();
        const double ck = t.c[k - 1];
        MuBranch b1, b2;
        const double m1 = next_mu(law1, prev, log_tau, k, log_r, ck, b1);
        const double m2 = next_mu(law2, prev, log_tau, k, log_r, ck, b2);
        const double ms = std::max(m1, m2);
        log_tau += std::log(ms);
        t.mu1.push_back(m1);
        t.mu2.push_back(m2);
        t.mu_star.push_back(ms);
        t.branch1.push_back(b1);
        t.branch2.push_back(b2);
        t.log_tau.push_back(log_tau);
    }
    for (double lt : t.log_tau) {
        const double v = std::exp(lt);
        if (!(v > 0.0)) throw NumericError("tau underflows within K; lower K");
        t.tau.push_back(v);
    }
    return t;
}

class Modulus {
   public:
    Modulus(std::vector<double> tau, double tail_bound) : tau_(std::move(tau)), tail_(tail_bound) {
        suffix_.assign(tau_.size() + 1, 0.0);
        for (std::size_t i = tau_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + tau_[i];
    }

    int K() const { return static_cast<int>(tau_.size()); }
    const std::vector<double>& tau() const { return tau_; }
    double tail_bound() const { return tail_; }

    /// omega(0) = 0; omega(t) = sum_{i = floor(1/t)}^{K} tau_i + tail for
    /// floor(1/t) <= K and 0 beyond the truncation horizon. Indices below 1
    /// (t > 1) start the sum at i = 1.
    double operator()(double t) const { return eval(t); }
    double eval(double t) const {
        if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("omega is defined for finite t >= 0");
        if (t == 0.0) return 0.0;
        const double inv = std::floor(1.0 / t);
        if (inv > static_cast<double>(tau_.size())) return 0.0;
        const std::size_t start = static_cast<std::size_t>(std::max(inv, 1.0));
        return suffix_[start - 1] + tail_;
    }

   private:
    std::vector<double> tau_;
    double tail_;
    std::vector<double> suffix_;  // suffix_[i] = sum_{j >= i} tau_j (0-based)
};

/// Bound on sum_{k > K} tau_k from the first K rows: the geometric tail of
/// a_k / c_k over the second half plus the geometric tail of tau itself.
inline double tail_bound(const SequenceTable& t, std::size_t K) {
    using namespace modulus_detail;
    if (K < 8 || K > t.tau.size()) throw DomainError("tail_bound needs 8 <= K <= table length");
    std::vector<double> b(K);
    for (std::size_t k = 0; k < K; ++k) b[k] = t.a[k] / t.c[k];
    const double rho_b = tail_ratio(b);
    if (!(rho_b <= kTailRatioMax))
        throw TailError("a_k / c_k tail ratio " + std::to_string(rho_b) + " is not geometric; raise K");
    const double mu = t.mu_star[K - 1];
    if (!(mu < 1.0)) throw TailError("mu* reached 1; tau tail uncertifiable");
    return b[K - 1] * rho_b / (1.0 - rho_b) + t.tau[K - 1] * mu / (1.0 - mu);
}

inline Modulus assemble_omega(const SequenceTable& t) {
    return Modulus(t.tau, tail_bound(t, t.tau.size()));
}

}  // namespace ftlab
