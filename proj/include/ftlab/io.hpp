#pragma once

// CSV and JSON serialization. Every double is printed with %.17g so equal
// inputs give byte-identical files; non-finite values become null in JSON.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "certifier.hpp"
#include "degeneracy.hpp"
#include "grid.hpp"
#include "modulus.hpp"
#include "regularity.hpp"
#include "solver.hpp"

namespace ftlab::io {

using nlohmann::json;

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void dump(const json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad + json(k).dump() + ": ";
                dump(v, out, indent, depth + 1);
            }
            out += "\n" + close + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += pad;
                dump(j[i], out, indent, depth + 1);
            }
            out += "\n" + close + "]";
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? fmt(v) : "null";
            return;
        }
        default: out += j.dump();
    }
}

}  // namespace detail

/// Pretty JSON with sorted keys and 17-digit doubles, newline-terminated.
inline std::string dump(const json& j) {
    std::string out;
    detail::dump(j, out, 2, 0);
    out += "\n";
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path);
    os << text;
    if (!os) throw ConfigError("failed writing " + path);
}

inline void write_json(const std::string& path, const json& j) { write_text(path, dump(j)); }

/// Header "x,value" or "x,y,value"; rows with j outer, i inner.
inline std::string field_csv(const DiscreteField& u) {
    const Grid& g = u.grid();
    std::ostringstream os;
    os << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point p = g.point(k);
        os << fmt(p[0]) << ',';
        if (g.dim() == 2) os << fmt(p[1]) << ',';
        os << fmt(u[k]) << '\n';
    }
    return os.str();
}

/// Inverse of field_csv; the grid is inferred from the row count.
inline DiscreteField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open field file " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty field file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    int dim;
    if (line == "x,value")
        dim = 1;
    else if (line == "x,y,value")
        dim = 2;
    else
        throw ConfigError("field file " + path + " has an unknown header '" + line + "'");
    std::vector<std::array<double, 3>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 3> r{0.0, 0.0, 0.0};
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= dim + 1) throw ConfigError(path + ":" + std::to_string(lineno) + ": too many columns");
            try {
                std::size_t used = 0;
                r[c] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
            ++c;
        }
        if (c != dim + 1) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                                            std::to_string(dim + 1) + " columns");
        rows.push_back(r);
    }
    int n = static_cast<int>(rows.size());
    if (dim == 2) {
        n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rows.size()))));
        if (static_cast<std::size_t>(n) * n != rows.size())
            throw ConfigError("field file " + path + " is not a square grid");
    }
    const Grid g(dim, n);
    DiscreteField u(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point p = g.point(k);
        if (std::abs(rows[k][0] - p[0]) > 1e-9 || (dim == 2 && std::abs(rows[k][1] - p[1]) > 1e-9))
            throw ConfigError("field file " + path + ": row " + std::to_string(k + 2) +
                              " is not at the expected grid node");
        u[k] = rows[k][dim];
    }
    return u;
}

inline json to_json(const SolveDiagnostics& d) {
    return {{"schema", "ftlab.solve_diagnostics/1"},
            {"iterations", d.iterations},
            {"final_residual", d.final_residual},
            {"dt_used", d.dt_used},
            {"eps_deg", d.eps_deg},
            {"converged", d.converged},
            {"total_iterations", d.total_iterations},
            {"levels", d.levels}};
}

inline json to_json(const CertificateReport& r, const Grid& g) {
    json v = json::array();
    for (const auto& x : r.violations) {
        const Point p = g.point(x.index);
        v.push_back({{"index", x.index}, {"x", std::vector<double>(p.begin(), p.begin() + g.dim())},
                     {"side", to_string(x.side)}, {"slack", x.slack}});
    }
    return {{"side", to_string(r.side)},       {"checked_nodes", r.checked_nodes},
            {"violation_count", r.violations.size()}, {"violations", v},
            {"max_violation", r.max_violation}, {"eta_cert", r.eta_cert},
            {"pass", r.pass}};
}

/// index,side,slack
inline std::string violations_csv(const std::vector<const CertificateReport*>& reports) {
    std::ostringstream os;
    os << "index,side,slack\n";
    for (const auto* r : reports)
        for (const auto& v : r->violations) os << v.index << ',' << to_string(v.side) << ',' << fmt(v.slack) << '\n';
    return os.str();
}

inline json to_json(const DiniReport& r) {
    return {{"theta", r.theta},
            {"partial_sums", r.partial_sums},
            {"verdict", to_string(r.verdict)},
            {"tail_estimate", r.tail_estimate},
            {"tail_ratio", r.tail_ratio}};
}

inline json to_json(const ScaleSchedule& s) {
    return {{"C", s.C}, {"alpha0", s.alpha0}, {"r", s.r}, {"mu1", s.mu1}, {"theta", s.theta}, {"C_clamped", s.clamped}};
}

/// k,a_k,c_k,mu1_k,mu2_k,mu_star_k,tau_k
inline std::string sequence_csv(const SequenceTable& t) {
    std::ostringstream os;
    os << "k,a_k,c_k,mu1_k,mu2_k,mu_star_k,tau_k\n";
    for (int k = 0; k < t.K; ++k)
        os << k + 1 << ',' << fmt(t.a[k]) << ',' << fmt(t.c[k]) << ',' << fmt(t.mu1[k]) << ',' << fmt(t.mu2[k])
           << ',' << fmt(t.mu_star[k]) << ',' << fmt(t.tau[k]) << '\n';
    return os.str();
}

/// center,scale,excess,rate
inline std::string decay_csv(const std::vector<DecayProfile>& profiles) {
    std::ostringstream os;
    os << "center,scale,excess,rate\n";
    for (std::size_t c = 0; c < profiles.size(); ++c)
        for (std::size_t i = 0; i < profiles[c].scales.size(); ++i)
            os << c << ',' << fmt(profiles[c].scales[i]) << ',' << fmt(profiles[c].excess[i]) << ','
               << fmt(profiles[c].rates[i]) << '\n';
    return os.str();
}

inline json to_json(const DecayProfile& p) {
    json grad = json::array();
    for (const auto& s : p.gradient_samples) grad.push_back({{"distance", s.distance}, {"difference", s.difference}});
    json fits = json::array();
    for (const auto& f : p.fits)
        fits.push_back({{"rho", f.rho}, {"a", f.a}, {"b", std::vector<double>{f.b[0], f.b[1]}}, {"E", f.E},
                        {"nodes", f.nodes}, {"locally_optimal", f.locally_optimal}});
    return {{"x0", std::vector<double>{p.x0[0], p.x0[1]}},
            {"r", p.r},
            {"requested_scales", p.requested},
            {"scales", p.scales},
            {"excess", p.excess},
            {"rates", p.rates},
            {"fits", fits},
            {"slope", p.slope},
            {"intercept", p.intercept},
            {"clean_affine", p.clean_affine},
            {"truncated", p.truncated},
            {"gradient_samples", grad}};
}

inline json to_json(const ModulusComparison& c) {
    return {{"scales", c.scales}, {"excess", c.excess},   {"omega", c.omega},
            {"ratios", c.ratios}, {"C_star", c.C_star},   {"spread", c.spread},
            {"envelope_holds", c.envelope_holds}};
}

inline json to_json(const EllipticityReport& r) {
    json j = {{"pass", r.pass}, {"samples", r.samples}};
    if (r.counterexample) j["counterexample"] = {{"lower", r.counterexample->lower},
                                                 {"difference", r.counterexample->difference},
                                                 {"upper", r.counterexample->upper}};
    return j;
}

}  // namespace ftlab::io
