// ftlab: solve, certify, build-modulus, measure, report.
//
// Exit codes: 0 ok, 1 config or I/O error, 2 solver non-convergence,
// 3 certificate failure, 4 modulus tail uncertifiable.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ftlab/config.hpp"
#include "ftlab/io.hpp"
#include "ftlab/manifest.hpp"
#include "ftlab/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ftlab;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kSolver = 2, kCertificate = 3, kTail = 4 };

struct Options {
    std::string config;
    std::string field;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> eval;
};

class Timer {
   public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

   private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Context {
    RunConfig cfg;
    fs::path out;
    RunManifest manifest;
};

Context open_context(const std::string& command, const Options& o) {
    const std::string bytes = read_bytes(o.config);
    json root;
    try {
        root = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + o.config + ": " + e.what());
    }
    Context ctx{parse_config(root), {}, RunManifest(command, bytes)};
    if (o.seed) ctx.cfg.seed = *o.seed;
    ctx.out = o.out.empty() ? fs::path(ctx.cfg.output) : fs::path(o.out);
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) throw ConfigError("cannot create output directory " + ctx.out.string() + ": " + ec.message());
    return ctx;
}

std::string path_in(const Context& ctx, const char* name) { return (ctx.out / name).string(); }

int stage_solve(Context& ctx, std::optional<DiscreteField>& field, json* summary) {
    Timer t;
    const Grid g(ctx.cfg.dim, ctx.cfg.n);
    try {
        auto res = solve(ctx.cfg.problem, g, ctx.cfg.scheme);
        ctx.manifest.stage("solve", t.seconds());
        io::write_text(path_in(ctx, "field.csv"), io::field_csv(res.field));
        const json diag = io::to_json(res.diagnostics);
        io::write_json(path_in(ctx, "solve_diagnostics.json"), diag);
        if (summary) (*summary)["solve"] = diag;
        field = std::move(res.field);
        if (!res.diagnostics.converged) {
            std::cerr << "solve: no convergence after " << res.diagnostics.iterations << " iterations (residual "
                      << io::fmt(res.diagnostics.final_residual) << ")\n";
            return kSolver;
        }
        std::cout << "solve: converged in " << res.diagnostics.iterations << " iterations, residual "
                  << io::fmt(res.diagnostics.final_residual) << "\n";
        return kOk;
    } catch (const SolverError& e) {
        ctx.manifest.stage("solve", t.seconds());
        json diag = io::to_json(e.diagnostics);
        diag["error"] = e.what();
        io::write_json(path_in(ctx, "solve_diagnostics.json"), diag);
        if (summary) (*summary)["solve"] = diag;
        std::cerr << "solve: " << e.what() << "\n";
        return kSolver;
    } catch (const NumericError& e) {
        ctx.manifest.stage("solve", t.seconds());
        const json diag = {{"schema", "ftlab.solve_diagnostics/1"}, {"converged", false}, {"error", e.what()}};
        io::write_json(path_in(ctx, "solve_diagnostics.json"), diag);
        if (summary) (*summary)["solve"] = diag;
        std::cerr << "solve: " << e.what() << "\n";
        return kSolver;
    }
}

int stage_certify(Context& ctx, const DiscreteField& u, json* summary) {
    Timer t;
    const auto lo = certify_min(u, ctx.cfg.problem, ctx.cfg.certify);
    const auto hi = certify_max(u, ctx.cfg.problem, ctx.cfg.certify);
    ctx.manifest.stage("certify", t.seconds());
    const bool pass = lo.pass && hi.pass;
    const json j = {{"schema", "ftlab.certificate/1"},
                    {"C0", ctx.cfg.problem.C0},
                    {"q", std::vector<double>{ctx.cfg.problem.q[0], ctx.cfg.problem.q[1]}},
                    {"min", io::to_json(lo, u.grid())},
                    {"max", io::to_json(hi, u.grid())},
                    {"pass", pass}};
    io::write_json(path_in(ctx, "certificate.json"), j);
    io::write_text(path_in(ctx, "violations.csv"), io::violations_csv({&lo, &hi}));
    if (summary) (*summary)["certificate"] = j;
    std::cout << "certify: " << (pass ? "pass" : "FAIL") << " (" << lo.violations.size() << " min, "
              << hi.violations.size() << " max violations)\n";
    return pass ? kOk : kCertificate;
}

int stage_modulus(Context& ctx, std::optional<ModulusBuild>& built, const std::optional<double>& eval,
                  json* summary) {
    Timer t;
    try {
        built = build_modulus(ctx.cfg.problem.sigma_plus, ctx.cfg.problem.sigma_minus, ctx.cfg.modulus);
    } catch (const TailError& e) {
        ctx.manifest.stage("build-modulus", t.seconds());
        const json j = {{"schema", "ftlab.modulus/1"}, {"error", "tail uncertifiable"}, {"detail", e.what()}};
        io::write_json(path_in(ctx, "modulus.json"), j);
        if (summary) (*summary)["modulus"] = j;
        std::cerr << "build-modulus: tail uncertifiable: " << e.what() << "\n";
        return kTail;
    }
    ctx.manifest.stage("build-modulus", t.seconds());
    json j = to_json(*built);
    if (eval) {
        const double w = built->omega(*eval);
        j["eval"] = {{"t", *eval}, {"omega", w}};
        std::cout << "omega(" << io::fmt(*eval) << ") = " << io::fmt(w) << "\n";
    }
    io::write_text(path_in(ctx, "sequence_table.csv"), io::sequence_csv(built->table));
    io::write_json(path_in(ctx, "modulus.json"), j);
    if (summary) (*summary)["modulus"] = j;
    bool cauchy = true;
    for (const auto& c : built->cauchy) cauchy = cauchy && c.ok;
    std::cout << "build-modulus: K = " << built->table.K << ", tail bound " << io::fmt(built->omega.tail_bound())
              << (cauchy ? ", Cauchy checks pass" : ", Cauchy check FAILED") << "\n";
    return cauchy ? kOk : kTail;
}

int stage_measure(Context& ctx, const DiscreteField& u, const Modulus* omega, json* summary) {
    Timer t;
    const auto m = measure(u, ctx.cfg.lab, omega);
    ctx.manifest.stage("measure", t.seconds());
    io::write_text(path_in(ctx, "decay_profile.csv"), io::decay_csv(m.profiles));
    const json j = to_json(m);
    io::write_json(path_in(ctx, "comparison.json"), j);
    if (summary) (*summary)["measure"] = j;
    for (std::size_t i = 0; i < m.profiles.size(); ++i) {
        const auto& p = m.profiles[i];
        if (p.truncated)
            std::cerr << "measure: warning: scales below 3h/2 dropped at center " << i << " (" << p.scales.size()
                      << " of " << p.requested << " kept)\n";
        if (p.clean_affine)
            std::cout << "measure: center " << i << " clean affine\n";
        else
            std::cout << "measure: center " << i << " slope " << io::fmt(p.slope) << "\n";
    }
    return kOk;
}

std::optional<Modulus> modulus_for_measure(Context& ctx, int& code) {
    try {
        return build_modulus(ctx.cfg.problem.sigma_plus, ctx.cfg.problem.sigma_minus, ctx.cfg.modulus).omega;
    } catch (const TailError& e) {
        std::cerr << "measure: modulus tail uncertifiable, comparison skipped: " << e.what() << "\n";
        code = kTail;
        return std::nullopt;
    }
}

int run(const std::string& cmd, const Options& o) {
    Context ctx = open_context(cmd, o);
    int code = kOk;
    if (cmd == "solve") {
        std::optional<DiscreteField> u;
        code = stage_solve(ctx, u, nullptr);
    } else if (cmd == "certify") {
        const auto u = io::read_field_csv(o.field);
        code = stage_certify(ctx, u, nullptr);
    } else if (cmd == "build-modulus") {
        std::optional<ModulusBuild> b;
        code = stage_modulus(ctx, b, o.eval, nullptr);
    } else if (cmd == "measure") {
        const auto u = io::read_field_csv(o.field);
        const auto omega = modulus_for_measure(ctx, code);
        stage_measure(ctx, u, omega ? &*omega : nullptr, nullptr);
    } else {
        json summary = {{"schema", "ftlab.summary/1"}, {"seed", ctx.cfg.seed}};
        Timer t;
        const auto ell = check_ellipticity(ctx.cfg.problem.F, 1000, ctx.cfg.seed, ctx.cfg.dim);
        ctx.manifest.stage("ellipticity", t.seconds());
        summary["ellipticity"] = io::to_json(ell);
        std::optional<DiscreteField> u;
        code = stage_solve(ctx, u, &summary);
        if (code == kOk) {
            const int cc = stage_certify(ctx, *u, &summary);
            std::optional<ModulusBuild> b;
            const int mc = stage_modulus(ctx, b, std::nullopt, &summary);
            stage_measure(ctx, *u, b ? &b->omega : nullptr, &summary);
            code = cc != kOk ? cc : mc;
        }
        io::write_json(path_in(ctx, "summary.json"), summary);
    }
    ctx.manifest.write(ctx.out);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degenerate free transmission problems: solver, certifier, modulus construction"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "run configuration (JSON)")->required();
        sub->add_option("--out", o.out, "output directory (default: config 'output')");
        sub->add_option("--seed", o.seed, "random seed (overrides the config)");
    };
    auto* s_solve = app.add_subcommand("solve", "solve the configured problem");
    add_common(s_solve);
    auto* s_cert = app.add_subcommand("certify", "certify a field against the viscosity inequalities");
    add_common(s_cert);
    s_cert->add_option("--field", o.field, "field CSV")->required();
    auto* s_mod = app.add_subcommand("build-modulus", "construct the sequence table and omega");
    add_common(s_mod);
    s_mod->add_option("--eval", o.eval, "evaluate omega at T");
    auto* s_meas = app.add_subcommand("measure", "affine-excess decay and comparison with omega");
    add_common(s_meas);
    s_meas->add_option("--field", o.field, "field CSV")->required();
    auto* s_rep = app.add_subcommand("report", "run the whole pipeline and bundle the results");
    add_common(s_rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        return run(cmd, o);
    } catch (const TailError& e) {
        std::cerr << cmd << ": tail uncertifiable: " << e.what() << "\n";
        return kTail;
    } catch (const SolverError& e) {
        std::cerr << cmd << ": " << e.what() << "\n";
        return kSolver;
    } catch (const ConfigError& e) {
        std::cerr << cmd << ": config error: " << e.what() << "\n";
        return kConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << cmd << ": config error: " << e.what() << "\n";
        return kConfig;
    } catch (const fs::filesystem_error& e) {
        std::cerr << cmd << ": I/O error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << cmd << ": error: " << e.what() << "\n";
        return kConfig;
    }
}
