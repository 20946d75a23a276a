#pragma once

// Run configuration: strict JSON schema, unknown keys rejected.

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "certifier.hpp"
#include "degeneracy.hpp"
#include "elliptic.hpp"
#include "modulus.hpp"
#include "problem.hpp"
#include "solver.hpp"

namespace ftlab {

inline constexpr const char* kConfigSchema = "ftlab.config/1";

struct ModulusConfig {
    double C = 1.0;
    double alpha0 = 0.5;
    double delta = 0.125;
    int K = 256;
};

struct LabConfig {
    std::vector<Point> centers{{0.0, 0.0}};
    double r = 0.5;
    int N = 6;
    /// Scale window of the modulus comparison.
    double rho_min = 0.0;
    double rho_max = 1.0;
};

struct RunConfig {
    ProblemInstance problem;
    /// Present when the problem came from a closed-form benchmark.
    std::optional<Benchmark> benchmark;
    int dim = 2;
    int n = 65;
    SchemeConfig scheme;
    CertifyOptions certify;
    ModulusConfig modulus;
    LabConfig lab;
    std::string output = "out";
    std::uint64_t seed = 0;
};

namespace config_detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

inline double num(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback, const std::string& where) {
    return j.contains(key) ? num(j, key, where) : fallback;
}

inline int int_or(const json& j, const std::string& key, int fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    return j.at(key).get<int>();
}

inline bool bool_or(const json& j, const std::string& key, bool fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
    return j.at(key).get<bool>();
}

inline std::string str(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
    return j.at(key).get<std::string>();
}

inline std::vector<double> num_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(where + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline Point point(const json& j, const std::string& where) {
    const auto v = num_list(j, where);
    if (v.empty() || v.size() > 2) throw ConfigError(where + " must have 1 or 2 coordinates");
    return {v[0], v.size() == 2 ? v[1] : 0.0};
}

}  // namespace config_detail

/// {"family": "power", "p": 2}, {"family": "power-log", "p", "q"},
/// {"family": "exponential-flat"}, {"family": "tabulated", "points": [[t, s], ...]},
/// {"family": "scaled", "base": {...}, "amplitude", "stretch"}; optional "t_max".
inline DegeneracyLaw parse_law(const nlohmann::json& j, const std::string& where) {
    using namespace config_detail;
    const std::string fam = str(j, "family", where);
    if (fam == "power") {
        check_keys(j, {"family", "p", "t_max"}, where);
        return DegeneracyLaw::power(num(j, "p", where), num_or(j, "t_max", DegeneracyLaw::kDefaultTMax, where));
    }
    if (fam == "power-log") {
        check_keys(j, {"family", "p", "q", "t_max"}, where);
        return DegeneracyLaw::power_log(num(j, "p", where), num(j, "q", where),
                                        num_or(j, "t_max", DegeneracyLaw::kDefaultTMax, where));
    }
    if (fam == "exponential-flat") {
        check_keys(j, {"family", "t_max"}, where);
        return DegeneracyLaw::exponential_flat(num_or(j, "t_max", DegeneracyLaw::kDefaultTMax, where));
    }
    if (fam == "tabulated") {
        check_keys(j, {"family", "points"}, where);
        if (!j.contains("points") || !j.at("points").is_array()) throw ConfigError(where + ".points must be an array");
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j.at("points")) {
            const auto v = num_list(p, where + ".points[]");
            if (v.size() != 2) throw ConfigError(where + ".points entries must be [t, s]");
            pts.emplace_back(v[0], v[1]);
        }
        return DegeneracyLaw::tabulated(std::move(pts));
    }
    if (fam == "scaled") {
        check_keys(j, {"family", "base", "amplitude", "stretch"}, where);
        if (!j.contains("base")) throw ConfigError(where + " is missing 'base'");
        return DegeneracyLaw::scaled(parse_law(j.at("base"), where + ".base"), num(j, "amplitude", where),
                                     num(j, "stretch", where));
    }
    throw ConfigError(where + ": unknown law family '" + fam + "'");
}

/// {"kind": "trace" | "pucci-minus" | "pucci-plus" | "bellman-min", "lambda", "Lambda",
///  "coefficients": [[a11], ...] (1D) or [[a11, a12, a22], ...] (2D)}
inline EllipticOperator parse_operator(const nlohmann::json& j, const std::string& where) {
    using namespace config_detail;
    check_keys(j, {"kind", "lambda", "Lambda", "coefficients"}, where);
    const std::string kind = str(j, "kind", where);
    const EllipticityPair pair(num_or(j, "lambda", 1.0, where), num_or(j, "Lambda", 1.0, where));
    if (kind != "bellman-min" && j.contains("coefficients"))
        throw ConfigError(where + ".coefficients only applies to bellman-min");
    if (kind == "trace") return EllipticOperator::trace(pair);
    if (kind == "pucci-minus") return EllipticOperator::pucci_minus(pair);
    if (kind == "pucci-plus") return EllipticOperator::pucci_plus(pair);
    if (kind == "bellman-min") {
        if (!j.contains("coefficients") || !j.at("coefficients").is_array())
            throw ConfigError(where + ".coefficients must be an array");
        std::vector<SymMatrix> cs;
        for (const auto& c : j.at("coefficients")) {
            const auto v = num_list(c, where + ".coefficients[]");
            if (v.size() == 1) {
                cs.push_back(SymMatrix::diag({v[0]}));
            } else if (v.size() == 3) {
                SymMatrix m(2);
                m(0, 0) = v[0], m(0, 1) = v[1], m(1, 1) = v[2];
                cs.push_back(m);
            } else {
                throw ConfigError(where + ".coefficients entries must be [a11] or [a11, a12, a22]");
            }
        }
        return EllipticOperator::bellman_min(pair, std::move(cs));
    }
    throw ConfigError(where + ": unknown operator kind '" + kind + "'");
}

/// {"kind": "constant", "value"}, {"kind": "affine", "a", "b": [..]},
/// {"kind": "quadratic", "a", "b": [..], "A": [a11, a12, a22] or [a11]} for
/// a + b.x + x^T A x / 2, {"kind": "radial-power", "coefficient", "exponent"}.
inline ScalarFn parse_function(const nlohmann::json& j, const std::string& where) {
    using namespace config_detail;
    const std::string kind = str(j, "kind", where);
    if (kind == "constant") {
        check_keys(j, {"kind", "value"}, where);
        const double v = num(j, "value", where);
        return [v](const Point&) { return v; };
    }
    auto vec2 = [&](const std::string& key) {
        if (!j.contains(key)) return Point{0.0, 0.0};
        return point(j.at(key), where + "." + key);
    };
    if (kind == "affine") {
        check_keys(j, {"kind", "a", "b"}, where);
        const double a = num_or(j, "a", 0.0, where);
        const Point b = vec2("b");
        return [a, b](const Point& x) { return a + b[0] * x[0] + b[1] * x[1]; };
    }
    if (kind == "quadratic") {
        check_keys(j, {"kind", "a", "b", "A"}, where);
        const double a = num_or(j, "a", 0.0, where);
        const Point b = vec2("b");
        std::vector<double> A{0.0, 0.0, 0.0};
        if (j.contains("A")) {
            auto v = num_list(j.at("A"), where + ".A");
            if (v.size() == 1) v = {v[0], 0.0, 0.0};
            if (v.size() != 3) throw ConfigError(where + ".A must be [a11] or [a11, a12, a22]");
            A = v;
        }
        return [a, b, A](const Point& x) {
            return a + b[0] * x[0] + b[1] * x[1] +
                   0.5 * (A[0] * x[0] * x[0] + 2.0 * A[1] * x[0] * x[1] + A[2] * x[1] * x[1]);
        };
    }
    if (kind == "radial-power") {
        check_keys(j, {"kind", "coefficient", "exponent"}, where);
        const double c = num_or(j, "coefficient", 1.0, where);
        const double e = num(j, "exponent", where);
        if (!(e > 0.0)) throw ConfigError(where + ".exponent must be positive");
        return [c, e](const Point& x) { return c * std::pow(std::hypot(x[0], x[1]), e); };
    }
    throw ConfigError(where + ": unknown function kind '" + kind + "'");
}

namespace config_detail {

inline Benchmark parse_benchmark(const json& j, int dim) {
    const std::string where = "problem.benchmark";
    check_keys(j, {"name", "a", "b", "theta", "theta1", "theta2", "c"}, where);
    BenchmarkParams p;
    p.dim = dim;
    p.a = num_or(j, "a", p.a, where);
    if (j.contains("b")) p.b = point(j.at("b"), where + ".b");
    p.theta = num_or(j, "theta", p.theta, where);
    p.theta1 = num_or(j, "theta1", p.theta1, where);
    p.theta2 = num_or(j, "theta2", p.theta2, where);
    p.c = num_or(j, "c", p.c, where);
    const auto name = parse_benchmark_name(str(j, "name", where));
    if (name == BenchmarkName::transmission_1d && dim != 1)
        throw ConfigError("transmission-1d needs grid.d = 1");
    return exact_benchmark(name, p);
}

/// sup |f| over the grid nodes.
inline double grid_sup(const ScalarFn& f, const Grid& g) {
    double m = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) m = std::max(m, std::abs(f(g.point(k))));
    return m;
}

}  // namespace config_detail

inline RunConfig parse_config(const nlohmann::json& root) {
    using namespace config_detail;
    check_keys(root, {"schema", "seed", "output", "problem", "grid", "scheme", "certify", "modulus", "lab"}, "config");
    if (root.contains("schema") && str(root, "schema", "config") != kConfigSchema)
        throw ConfigError(std::string("unsupported config schema; expected ") + kConfigSchema);
    RunConfig cfg;
    if (root.contains("seed")) {
        if (!root.at("seed").is_number_unsigned()) throw ConfigError("config.seed must be a nonnegative integer");
        cfg.seed = root.at("seed").get<std::uint64_t>();
    }
    if (root.contains("output")) cfg.output = str(root, "output", "config");

    const json grid = root.value("grid", json::object());
    check_keys(grid, {"d", "n"}, "grid");
    cfg.dim = int_or(grid, "d", 2, "grid");
    cfg.n = int_or(grid, "n", 65, "grid");
    const Grid g(cfg.dim, cfg.n);

    if (!root.contains("problem")) throw ConfigError("config is missing 'problem'");
    const json& pj = root.at("problem");
    check_keys(pj, {"benchmark", "operator", "sigma_plus", "sigma_minus", "f", "g", "C0", "q"}, "problem");
    EllipticOperator F = pj.contains("operator") ? parse_operator(pj.at("operator"), "problem.operator")
                                                 : EllipticOperator::trace();
    if (pj.contains("benchmark")) {
        for (const char* k : {"sigma_plus", "sigma_minus", "f", "g"})
            if (pj.contains(k)) throw ConfigError(std::string("problem.") + k + " conflicts with problem.benchmark");
        cfg.benchmark = parse_benchmark(pj.at("benchmark"), cfg.dim);
        if (F.kind() != OperatorKind::trace)
            throw ConfigError("benchmarks are closed-form for the trace operator only");
        cfg.problem = cfg.benchmark->problem(F);
    } else {
        for (const char* k : {"sigma_plus", "sigma_minus", "f", "g"})
            if (!pj.contains(k)) throw ConfigError(std::string("problem is missing '") + k + "'");
        const auto sp = parse_law(pj.at("sigma_plus"), "problem.sigma_plus");
        const auto sm = parse_law(pj.at("sigma_minus"), "problem.sigma_minus");
        const auto f = parse_function(pj.at("f"), "problem.f");
        const auto gg = parse_function(pj.at("g"), "problem.g");
        cfg.problem = ProblemInstance{F, sp, sm, f, gg, grid_sup(f, g), {0.0, 0.0}};
    }
    if (pj.contains("C0")) {
        cfg.problem.C0 = num(pj, "C0", "problem");
        if (!(cfg.problem.C0 >= 0.0)) throw ConfigError("problem.C0 must be nonnegative");
    }
    if (pj.contains("q")) cfg.problem.q = point(pj.at("q"), "problem.q");

    const json sj = root.value("scheme", json::object());
    check_keys(sj, {"dt", "tol_solve", "max_iter", "eps_deg", "cfl", "local_time_step", "nested", "sigma_floor"},
               "scheme");
    auto& s = cfg.scheme;
    s.dt = num_or(sj, "dt", s.dt, "scheme");
    s.tol_solve = num_or(sj, "tol_solve", s.tol_solve, "scheme");
    s.max_iter = int_or(sj, "max_iter", s.max_iter, "scheme");
    s.eps_deg = num_or(sj, "eps_deg", s.eps_deg, "scheme");
    s.cfl = num_or(sj, "cfl", s.cfl, "scheme");
    s.local_time_step = bool_or(sj, "local_time_step", s.local_time_step, "scheme");
    s.nested = bool_or(sj, "nested", s.nested, "scheme");
    s.sigma_floor = num_or(sj, "sigma_floor", s.sigma_floor, "scheme");

    const json cj = root.value("certify", json::object());
    check_keys(cj, {"rho_test", "eta_cert", "eta_touch", "eta_H", "eta_g"}, "certify");
    auto& c = cfg.certify;
    c.rho_test = int_or(cj, "rho_test", c.rho_test, "certify");
    c.eta_cert = num_or(cj, "eta_cert", c.eta_cert, "certify");
    c.eta_touch = num_or(cj, "eta_touch", c.eta_touch, "certify");
    c.eta_H = num_or(cj, "eta_H", c.eta_H, "certify");
    c.eta_g = num_or(cj, "eta_g", c.eta_g, "certify");
    if (c.rho_test < 1) throw ConfigError("certify.rho_test must be at least 1");

    const json mj = root.value("modulus", json::object());
    check_keys(mj, {"C", "alpha0", "delta", "K"}, "modulus");
    auto& m = cfg.modulus;
    m.C = num_or(mj, "C", m.C, "modulus");
    m.alpha0 = num_or(mj, "alpha0", m.alpha0, "modulus");
    m.delta = num_or(mj, "delta", m.delta, "modulus");
    m.K = int_or(mj, "K", m.K, "modulus");
    if (m.K < 8) throw ConfigError("modulus.K must be at least 8");
    (void)RescaleParams(m.delta);

    const json lj = root.value("lab", json::object());
    check_keys(lj, {"centers", "r", "N", "rho_min", "rho_max"}, "lab");
    auto& l = cfg.lab;
    if (lj.contains("centers")) {
        if (!lj.at("centers").is_array() || lj.at("centers").empty())
            throw ConfigError("lab.centers must be a nonempty array");
        l.centers.clear();
        for (const auto& p : lj.at("centers")) l.centers.push_back(point(p, "lab.centers[]"));
    }
    l.r = num_or(lj, "r", l.r, "lab");
    l.N = int_or(lj, "N", l.N, "lab");
    l.rho_min = num_or(lj, "rho_min", l.rho_min, "lab");
    l.rho_max = num_or(lj, "rho_max", l.rho_max, "lab");
    if (!(l.r > 0.0 && l.r < 1.0)) throw ConfigError("lab.r must lie in (0, 1)");
    if (l.N < 1) throw ConfigError("lab.N must be at least 1");
    return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

}  // namespace ftlab
