#pragma once

// Stage drivers shared by the command-line tool and the acceptance suite.

#include <string>
#include <vector>

#include "config.hpp"
#include "io.hpp"
#include "modulus.hpp"
#include "regularity.hpp"

namespace ftlab {

struct CauchyCheck {
    int K;
    double increment;  // S_{2K} - S_K
    double tail_bound;
    bool ok;
};

struct ModulusBuild {
    ScaleSchedule schedule;
    RescaleParams rescale{0.125};
    DiniReport dini_plus, dini_minus;
    SequenceTable table;
    Modulus omega{{}, 0.0};
    std::vector<CauchyCheck> cauchy;
    int else_steps = 0;
    /// max over else-branch steps of tau_k / (a_k / c_k); at most 1 when the bound holds
    double else_bound_worst = 0.0;
};

/// Scale schedule, Dini screening of both laws, rescaling, recursion and omega.
/// Throws TailError when either law is not Dini or the tail cannot be certified.
inline ModulusBuild build_modulus(const DegeneracyLaw& s1, const DegeneracyLaw& s2, const ModulusConfig& mc) {
    ModulusBuild b;
    b.schedule = choose_scale(mc.C, mc.alpha0);
    b.rescale = RescaleParams(mc.delta);
    if (mc.K < 8) throw ConfigError("modulus K must be at least 8");
    b.dini_plus = dini_sum(s1, b.schedule.theta, mc.K);
    b.dini_minus = dini_sum(s2, b.schedule.theta, mc.K);
    for (const auto* r : {&b.dini_plus, &b.dini_minus})
        if (r->verdict == DiniVerdict::not_dini)
            throw TailError("degeneracy law is not Dini at theta = " + io::fmt(b.schedule.theta) +
                            "; modulus tail uncertifiable");
    const auto a = a_sequence(s1, s2, b.schedule.theta, mc.K);
    const auto c = rescale_sequence(a, b.rescale);
    b.table = mu_recursion(b.schedule, s1, s2, a, c, mc.K);
    b.omega = assemble_omega(b.table);

    std::vector<double> S(b.table.tau.size() + 1, 0.0);
    for (std::size_t k = 0; k < b.table.tau.size(); ++k) S[k + 1] = S[k] + b.table.tau[k];
    for (int K = 32; 2 * K <= mc.K; K *= 2) {
        if (K > 128) break;
        const double inc = S[2 * K] - S[K];
        const double tb = tail_bound(b.table, K);
        b.cauchy.push_back({K, inc, tb, inc <= tb});
    }
    for (int k = 0; k < b.table.K; ++k)
        if (b.table.else_branch(k)) {
            ++b.else_steps;
            b.else_bound_worst = std::max(b.else_bound_worst, b.table.tau[k] / (b.table.a[k] / b.table.c[k]));
        }
    return b;
}

inline nlohmann::json to_json(const ModulusBuild& b) {
    nlohmann::json cauchy = nlohmann::json::array();
    for (const auto& c : b.cauchy)
        cauchy.push_back({{"K", c.K}, {"increment", c.increment}, {"tail_bound", c.tail_bound}, {"ok", c.ok}});
    return {{"schema", "ftlab.modulus/1"},
            {"schedule", io::to_json(b.schedule)},
            {"delta", b.rescale.delta},
            {"eps", b.rescale.eps},
            {"K", b.table.K},
            {"tau", b.table.tau},
            {"tail_bound", b.omega.tail_bound()},
            {"omega_rule", "omega(t) = sum_{i=floor(1/t)}^{K} tau_i + tail_bound for floor(1/t) <= K, else 0"},
            {"dini", {{"sigma_plus", io::to_json(b.dini_plus)}, {"sigma_minus", io::to_json(b.dini_minus)}}},
            {"cauchy", cauchy},
            {"else_branch_steps", b.else_steps},
            {"else_bound_worst_ratio", b.else_bound_worst}};
}

struct MeasureResult {
    std::vector<DecayProfile> profiles;
    std::vector<ModulusComparison> comparisons;  // empty when no modulus was supplied
};

inline MeasureResult measure(const DiscreteField& u, const LabConfig& lab, const Modulus* omega) {
    MeasureResult m;
    for (const auto& x0 : lab.centers) {
        m.profiles.push_back(decay_scan(u, x0, lab.r, lab.N));
        if (omega) {
            if (m.profiles.back().clean_affine) {
                ModulusComparison c;
                c.scales = m.profiles.back().scales;
                c.excess = m.profiles.back().excess;
                for (double s : c.scales) c.omega.push_back((*omega)(s));
                c.ratios.assign(c.scales.size(), 0.0);
                c.spread = 1.0;
                m.comparisons.push_back(c);
            } else {
                m.comparisons.push_back(compare_modulus(m.profiles.back(), *omega, lab.rho_min, lab.rho_max));
            }
        }
    }
    return m;
}

inline nlohmann::json to_json(const MeasureResult& m) {
    nlohmann::json centers = nlohmann::json::array();
    for (std::size_t i = 0; i < m.profiles.size(); ++i) {
        nlohmann::json c = {{"profile", io::to_json(m.profiles[i])}};
        if (i < m.comparisons.size()) c["comparison"] = io::to_json(m.comparisons[i]);
        centers.push_back(c);
    }
    return {{"schema", "ftlab.comparison/1"}, {"centers", centers}};
}

}  // namespace ftlab
