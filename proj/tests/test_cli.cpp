#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "ftlab/grid.hpp"
#include "ftlab/io.hpp"
#include "ftlab/manifest.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = FTLAB_CLI_PATH;
const fs::path kConfigs = FTLAB_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("ftlab_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = "'" + kCli + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return ftlab::read_bytes(p); }

json load(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

json affine_config() { return load(kConfigs / "affine.json"); }

std::string flags(const fs::path& config, const fs::path& out) {
    return "--config '" + config.string() + "' --out '" + out.string() + "'";
}

}  // namespace

TEST(Cli, SolveAffineSucceeds) {
    const auto d = scratch("solve");
    EXPECT_EQ(run("solve " + flags(kConfigs / "affine.json", d / "out"), d / "log"), 0) << slurp(d / "log");
    EXPECT_TRUE(fs::exists(d / "out" / "field.csv"));
    const auto diag = load(d / "out" / "solve_diagnostics.json");
    EXPECT_TRUE(diag["converged"].get<bool>());
}

TEST(Cli, MalformedConfigExitsOne) {
    const auto d = scratch("malformed");
    std::ofstream(d / "bad.json") << "{\"grid\": ";
    EXPECT_EQ(run("solve " + flags(d / "bad.json", d / "out"), d / "log"), 1);
    EXPECT_NE(slurp(d / "log").find("malformed"), std::string::npos);
    EXPECT_EQ(run("solve " + flags(d / "absent.json", d / "out"), d / "log"), 1);
}

TEST(Cli, UnknownKeyAndBadKExitOne) {
    const auto d = scratch("badkeys");
    auto j = affine_config();
    j["grid"]["spacing"] = 0.1;
    EXPECT_EQ(run("solve " + flags(write_config(d, j), d / "out"), d / "log"), 1);
    j = affine_config();
    j["modulus"]["K"] = 0;
    EXPECT_EQ(run("build-modulus " + flags(write_config(d, j), d / "out"), d / "log"), 1);
}

TEST(Cli, MissingArgumentsExitOne) {
    const auto d = scratch("args");
    EXPECT_EQ(run("certify --config '" + (kConfigs / "affine.json").string() + "'", d / "log"), 1);
    EXPECT_EQ(run("", d / "log"), 1);
    EXPECT_EQ(run("certify " + flags(kConfigs / "affine.json", d / "out") + " --field '" + (d / "nope.csv").string() + "'",
                  d / "log"),
              1);
}

TEST(Cli, IterationCapExitsTwo) {
    const auto d = scratch("cap");
    auto j = load(kConfigs / "radial.json");
    j["scheme"] = {{"max_iter", 1}, {"nested", false}};
    EXPECT_EQ(run("solve " + flags(write_config(d, j), d / "out"), d / "log"), 2);
    EXPECT_FALSE(load(d / "out" / "solve_diagnostics.json")["converged"].get<bool>());
}

TEST(Cli, PlantedFieldFailsCertification) {
    const auto d = scratch("planted");
    const ftlab::Grid g(2, 33);
    const auto u = ftlab::DiscreteField::sample(g, [](const ftlab::Point& x) { return 10 * (x[0] * x[0] + x[1] * x[1]); });
    ftlab::io::write_text((d / "planted.csv").string(), ftlab::io::field_csv(u));
    json j = json::parse(R"({
      "grid": {"d": 2, "n": 33},
      "problem": {"sigma_plus": {"family": "power", "p": 1}, "sigma_minus": {"family": "power", "p": 1},
                  "f": {"kind": "constant", "value": 0.0}, "g": {"kind": "constant", "value": 0.0}, "C0": 0.1}
    })");
    const auto cfg = write_config(d, j);
    EXPECT_EQ(run("certify " + flags(cfg, d / "out") + " --field '" + (d / "planted.csv").string() + "'", d / "log"), 3);
    const auto cert = load(d / "out" / "certificate.json");
    EXPECT_FALSE(cert["pass"].get<bool>());
    EXPECT_FALSE(cert["min"]["pass"].get<bool>());
    const auto viol = slurp(d / "out" / "violations.csv");
    EXPECT_GT(std::count(viol.begin(), viol.end(), '\n'), 10);
}

TEST(Cli, CertifySolvedFieldPasses) {
    const auto d = scratch("certpass");
    const auto cfg = kConfigs / "affine.json";
    ASSERT_EQ(run("solve " + flags(cfg, d / "out"), d / "log"), 0);
    EXPECT_EQ(run("certify " + flags(cfg, d / "cert") + " --field '" + (d / "out" / "field.csv").string() + "'",
                  d / "log"),
              0)
        << slurp(d / "log");
}

TEST(Cli, NonDiniLawExitsFour) {
    const auto d = scratch("expflat");
    EXPECT_EQ(run("build-modulus " + flags(kConfigs / "exp_flat.json", d / "out"), d / "log"), 4);
    EXPECT_EQ(load(d / "out" / "modulus.json")["error"], "tail uncertifiable");
    EXPECT_EQ(run("report " + flags(kConfigs / "exp_flat.json", d / "rep"), d / "log"), 4);
}

TEST(Cli, BuildModulusEval) {
    const auto d = scratch("eval");
    ASSERT_EQ(run("build-modulus " + flags(kConfigs / "radial.json", d / "out") + " --eval 0.125", d / "log"), 0)
        << slurp(d / "log");
    const auto m = load(d / "out" / "modulus.json");
    ASSERT_TRUE(m.contains("eval"));
    EXPECT_EQ(m["eval"]["t"].get<double>(), 0.125);
    // recompute from the tau column: sum_{i >= 8} tau_i + tail
    const auto tau = m["tau"].get<std::vector<double>>();
    double s = m["tail_bound"].get<double>();
    for (std::size_t i = 7; i < tau.size(); ++i) s += tau[i];
    EXPECT_NEAR(m["eval"]["omega"].get<double>(), s, 1e-14 * s);
    EXPECT_NE(slurp(d / "log").find("omega(0.125)"), std::string::npos);
    const auto table = slurp(d / "out" / "sequence_table.csv");
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), static_cast<long>(tau.size()) + 1);
}

TEST(Cli, MeasureAffineIsClean) {
    const auto d = scratch("measure");
    const auto cfg = kConfigs / "affine.json";
    ASSERT_EQ(run("solve " + flags(cfg, d / "out"), d / "log"), 0);
    ASSERT_EQ(run("measure " + flags(cfg, d / "meas") + " --field '" + (d / "out" / "field.csv").string() + "'",
                  d / "log"),
              0)
        << slurp(d / "log");
    const auto cmp = load(d / "meas" / "comparison.json");
    ASSERT_FALSE(cmp["centers"].empty());
    EXPECT_TRUE(cmp["centers"][0]["profile"]["clean_affine"].get<bool>());
    EXPECT_EQ(cmp["centers"][0]["comparison"]["C_star"].get<double>(), 0.0);
    EXPECT_TRUE(fs::exists(d / "meas" / "decay_profile.csv"));
}

TEST(Cli, ReportManifestIsComplete) {
    const auto d = scratch("report");
    ASSERT_EQ(run("report " + flags(kConfigs / "report.json", d / "out") + " --seed 7", d / "log"), 0)
        << slurp(d / "log");
    const auto out = d / "out";
    for (const char* f : {"field.csv", "solve_diagnostics.json", "certificate.json", "violations.csv",
                          "sequence_table.csv", "modulus.json", "decay_profile.csv", "comparison.json",
                          "summary.json", "manifest.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    EXPECT_EQ(load(out / "summary.json")["seed"].get<int>(), 7);
    const auto man = load(out / "manifest.json");
    EXPECT_EQ(man["config_sha256"], ftlab::sha256_hex(slurp(kConfigs / "report.json")));
    std::set<std::string> listed;
    for (const auto& f : man["files"]) {
        listed.insert(f["path"].get<std::string>());
        EXPECT_EQ(f["sha256"], ftlab::sha256_hex(slurp(out / f["path"].get<std::string>())));
    }
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().filename() != "manifest.json") EXPECT_TRUE(listed.count(e.path().filename().string())) << e.path();
    EXPECT_EQ(listed.size(), 9u);
}
