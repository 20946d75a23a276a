#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ftlab/modulus.hpp"

using namespace ftlab;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double ratio_norm(const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] / c[i];
    return s;
}

struct Built {
    SequenceTable table;
    Modulus omega{{}, 0.0};
};

Built build(const DegeneracyLaw& s1, const DegeneracyLaw& s2, int K = 256, double C = 1.0, double alpha0 = 0.5,
            double delta = 0.125) {
    const auto sched = choose_scale(C, alpha0);
    const auto a = a_sequence(s1, s2, sched.theta, K);
    const auto c = rescale_sequence(a, RescaleParams(delta));
    Built b{mu_recursion(sched, s1, s2, a, c, K)};
    b.omega = assemble_omega(b.table);
    return b;
}

}  // namespace

TEST(ScaleSchedule, Examples) {
    const auto s = choose_scale(1.0, 0.5);
    EXPECT_DOUBLE_EQ(s.r, 1.0 / 16);
    EXPECT_DOUBLE_EQ(s.mu1, 0.5);
    EXPECT_DOUBLE_EQ(s.theta, 0.125);
    const auto t = choose_scale(1.0, 1.0);
    EXPECT_DOUBLE_EQ(t.r, 1.0 / 16);
    EXPECT_DOUBLE_EQ(t.mu1, 0.125);
    EXPECT_DOUBLE_EQ(t.theta, 0.5);
}

TEST(ScaleSchedule, DefiningIdentity) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> C(0.1, 50.0), A(0.01, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto s = choose_scale(C(rng), A(rng));
        const double lhs = 2 * s.C * std::pow(s.r, 1 + s.alpha0), rhs = s.mu1 * s.r;
        ASSERT_NEAR(lhs, rhs, 1e-12 * rhs);
        ASSERT_LT(s.r, s.mu1);
        ASSERT_LT(s.mu1, 1.0);
        ASSERT_GT(s.theta, 0.0);
        ASSERT_LT(s.theta, 1.0);
    }
}

TEST(ScaleSchedule, ClampsSmallC) {
    const auto s = choose_scale(0.1, 0.5);
    EXPECT_TRUE(s.clamped);
    EXPECT_EQ(s.C, 0.5);
    EXPECT_THROW(choose_scale(1.0, 0.0), ConfigError);
    EXPECT_THROW(choose_scale(-1.0, 0.5), ConfigError);
}

TEST(RescaleParams, EpsilonRange) {
    for (double d : {1e-6, 0.1, 0.2499}) {
        const RescaleParams p(d);
        EXPECT_GT(p.eps, 0.8);
        EXPECT_LT(p.eps, 1.0);
        EXPECT_DOUBLE_EQ(p.eps, 1.0 / (1.0 + d));
    }
    EXPECT_THROW(RescaleParams(0.0), ConfigError);
    EXPECT_THROW(RescaleParams(0.25), ConfigError);
}

TEST(Rescale, GeometricHalf) {
    std::vector<double> a;
    for (int k = 1; k <= 64; ++k) a.push_back(std::pow(0.5, k));
    const RescaleParams p(0.125);
    EXPECT_NEAR(p.eps, 8.0 / 9.0, 1e-15);
    const auto c = rescale_sequence(a, p);
    const double n = sum(a), r = ratio_norm(a, c);
    EXPECT_LE(*std::max_element(c.begin(), c.end()), 1 / p.eps + 1e-10);
    EXPECT_GE(r, p.eps * (1 - p.delta / 2) * n - 1e-10);
    EXPECT_LE(r, p.eps * (1 + p.delta) * n + 1e-10);
    EXPECT_GE(r, 0.7 * n);
    EXPECT_LT(c.back(), 1e-6 * c.front());
}

TEST(Rescale, SingleEntry) {
    const RescaleParams p(0.125);
    const auto c = rescale_sequence({0.3}, p);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_LE(c[0], 1 / p.eps + 1e-12);
    const double r = 0.3 / c[0];
    EXPECT_GE(r, p.eps * (1 - p.delta / 2) * 0.3);
    EXPECT_LE(r, p.eps * (1 + p.delta) * 0.3);
}

TEST(Rescale, RandomGeometricTailedSequences) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> D(1e-3, 0.25 - 1e-3), R(0.05, 0.9), J(0.2, 5.0);
    std::uniform_int_distribution<int> L(8, 300);
    for (int s = 0; s < 100; ++s) {
        const double rho = R(rng);
        std::vector<double> a;
        double v = J(rng);
        for (int k = 0, n = L(rng); k < n; ++k) {
            a.push_back(v * J(rng));
            v *= rho;
        }
        // keep the last quarter geometric
        for (std::size_t k = 3 * a.size() / 4; k < a.size(); ++k) a[k] = a[k - 1] * rho;
        const RescaleParams p(D(rng));
        const auto c = rescale_sequence(a, p);
        const double n = sum(a), r = ratio_norm(a, c);
        ASSERT_LE(*std::max_element(c.begin(), c.end()), 1 / p.eps + 1e-10);
        ASSERT_GE(r, p.eps * (1 - p.delta / 2) * n - 1e-10 * n);
        ASSERT_LE(r, p.eps * (1 + p.delta) * n + 1e-10 * n);
    }
}

TEST(Rescale, RejectsBadSequences) {
    const RescaleParams p(0.1);
    EXPECT_THROW(rescale_sequence({}, p), DomainError);
    EXPECT_THROW(rescale_sequence({1.0, -1.0}, p), DomainError);
    EXPECT_THROW(rescale_sequence({0.0, 0.0}, p), DomainError);
    std::vector<double> harmonic;
    for (int k = 1; k <= 64; ++k) harmonic.push_back(1.0 / k);
    EXPECT_THROW(rescale_sequence(harmonic, p), TailError);
}

TEST(MuRecursion, TableInvariants) {
    for (auto [p1, p2] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{2.0, 3.0}}) {
        const auto s1 = DegeneracyLaw::power(p1), s2 = DegeneracyLaw::power(p2);
        const auto b = build(s1, s2);
        const auto& t = b.table;
        const RescaleParams rp(0.125);
        ASSERT_EQ(t.tau.size(), 256u);
        for (int k = 0; k < t.K; ++k) {
            ASSERT_GT(t.a[k], 0.0);
            ASSERT_GT(t.c[k], 0.0);
            ASSERT_GT(t.mu_star[k], 0.0);
            ASSERT_GT(t.tau[k], 0.0);
            ASSERT_LE(t.c[k], 1 / rp.eps + 1e-12);
            ASSERT_EQ(t.mu_star[k], std::max(t.mu1[k], t.mu2[k]));
            if (k > 0) {
                ASSERT_NEAR(t.tau[k], t.tau[k - 1] * t.mu_star[k], 1e-12 * t.tau[k]);
                ASSERT_GE(t.mu_star[k], t.mu_star[k - 1]);
            }
        }
        EXPECT_DOUBLE_EQ(t.mu_star[0], t.schedule.mu1);
        EXPECT_DOUBLE_EQ(t.tau[0], t.schedule.mu1);
    }
}

TEST(MuRecursion, BranchesSatisfyTheirDefiningRelations) {
    for (auto [p1, p2] : {std::pair{1.0, 2.0}, std::pair{2.0, 2.0}, std::pair{3.0, 1.0}}) {
        const double p[2] = {p1, p2};
        const auto b = build(DegeneracyLaw::power(p1), DegeneracyLaw::power(p2));
        const auto& t = b.table;
        const double log_r = std::log(t.schedule.r);
        int else_steps = 0;
        for (int k = 1; k < t.K; ++k) {
            const double log_prev_tau = std::log(t.tau[k - 1]);
            const double mus[2] = {t.mu1[k], t.mu2[k]};
            const MuBranch br[2] = {t.branch1[k], t.branch2[k]};
            for (int i = 0; i < 2; ++i) {
                // ln of (mu P / r^k) (mu P c_k)^p with P = tau_{k-1}, row index k + 1
                auto log_cond = [&](double mu) {
                    const double lt = std::log(mu) + log_prev_tau;
                    return lt - (k + 1) * log_r + p[i] * (lt + std::log(t.c[k]));
                };
                if (br[i] == MuBranch::root) {
                    EXPECT_NEAR(std::exp(log_cond(mus[i])), 1.0, 1e-8);
                    EXPECT_GE(mus[i], t.mu_star[k - 1]);
                } else {
                    EXPECT_EQ(mus[i], t.mu_star[k - 1]);
                    EXPECT_GE(log_cond(t.mu_star[k - 1]), 0.0);
                }
            }
            if (t.else_branch(k)) {
                ++else_steps;
                EXPECT_LE(t.tau[k], t.a[k] / t.c[k] * (1 + 1e-8)) << "k=" << k + 1;
            } else {
                EXPECT_NEAR(t.tau[k], t.tau[k - 1] * t.mu_star[k - 1], 1e-12 * t.tau[k]);
            }
        }
        if (p1 != p2) EXPECT_GT(else_steps, 0);
    }
}

TEST(MuRecursion, SymmetricLawsGiveEqualBranches) {
    const auto s = DegeneracyLaw::power_log(2.0, 1.0);
    const auto b = build(s, s, 128);
    for (int k = 0; k < b.table.K; ++k) EXPECT_EQ(b.table.mu1[k], b.table.mu2[k]);
}

TEST(MuRecursion, RejectsShortInput) {
    const auto sched = choose_scale(1.0, 0.5);
    const auto p = DegeneracyLaw::power(1.0);
    EXPECT_THROW(mu_recursion(sched, p, p, {0.1}, {1.0}, 4), DomainError);
    EXPECT_THROW(mu_recursion(sched, p, p, {}, {}, 0), ConfigError);
}

TEST(Modulus, MonotoneAndZeroAtZero) {
    const auto b = build(DegeneracyLaw::power(1.0), DegeneracyLaw::power(2.0));
    const auto& w = b.omega;
    EXPECT_EQ(w(0.0), 0.0);
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double t = i / 100.0;
        ASSERT_GE(w(t), prev) << t;
        prev = w(t);
    }
    EXPECT_EQ(w(1.0 / 1000), 0.0);  // beyond the truncation horizon
    EXPECT_THROW(w(-0.1), DomainError);
    EXPECT_THROW(w(std::nan("")), DomainError);
}

TEST(Modulus, EvaluationRule) {
    const auto b = build(DegeneracyLaw::power(2.0), DegeneracyLaw::power(2.0), 64);
    const auto& tau = b.table.tau;
    const double tail = b.omega.tail_bound();
    for (double t : {1.0, 0.5, 0.3, 0.1, 1.0 / 64}) {
        const int start = static_cast<int>(std::floor(1 / t));
        double s = 0.0;
        for (int i = start; i <= 64; ++i) s += tau[i - 1];
        EXPECT_NEAR(b.omega(t), s + tail, 1e-13 * (s + tail)) << t;
    }
}

TEST(Modulus, OmegaAtOneSplitsIntoEqualityStepsAndRescaledSum) {
    // else-branch rows obey tau_k <= a_k / c_k; equality rows are bounded by nothing smaller than themselves
    for (auto [p1, p2] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{2.0, 3.0}}) {
        const auto b = build(DegeneracyLaw::power(p1), DegeneracyLaw::power(p2));
        const auto& t = b.table;
        double eq = 0.0, el = 0.0, ac = 0.0;
        for (int k = 0; k < t.K; ++k) {
            ac += t.a[k] / t.c[k];
            (k > 0 && t.else_branch(k) ? el : eq) += t.tau[k];
        }
        EXPECT_LE(el, ac * (1 + 1e-8)) << p1 << "," << p2;
        EXPECT_LE(b.omega(1.0), eq + ac + b.omega.tail_bound()) << p1 << "," << p2;
        EXPECT_NEAR(b.omega(1.0), eq + el + b.omega.tail_bound(), 1e-13);
    }
}

TEST(Modulus, CauchyPartialSums) {
    for (auto [p1, p2] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{2.0, 2.0}, std::pair{3.0, 3.0}}) {
        const auto b = build(DegeneracyLaw::power(p1), DegeneracyLaw::power(p2));
        const auto& tau = b.table.tau;
        for (int K : {32, 64, 128}) {
            double inc = 0.0;
            for (int k = K; k < 2 * K; ++k) inc += tau[k];
            EXPECT_LE(inc, tail_bound(b.table, K)) << p1 << "," << p2 << " K=" << K;
        }
    }
}

TEST(Modulus, HolderTypeDecayForPowerLaws) {
    const auto b = build(DegeneracyLaw::power(1.0), DegeneracyLaw::power(2.0));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i <= 20; ++i) {
        const double t = std::pow(10.0, -3.0 + 2.0 * i / 20);
        const double w = b.omega(t);
        if (!(w > 0.0)) continue;
        const double x = std::log(t), y = std::log(w);
        sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
    }
    ASSERT_GE(m, 10);
    EXPECT_GT((m * sxy - sx * sy) / (m * sxx - sx * sx), 0.0);
}

TEST(Modulus, TailBoundPreconditions) {
    const auto b = build(DegeneracyLaw::power(1.0), DegeneracyLaw::power(1.0), 64);
    EXPECT_THROW(tail_bound(b.table, 4), DomainError);
    EXPECT_THROW(tail_bound(b.table, 65), DomainError);
    EXPECT_GT(tail_bound(b.table, 64), 0.0);
}
