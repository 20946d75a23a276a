#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ftlab/config.hpp"
#include "ftlab/io.hpp"
#include "ftlab/manifest.hpp"
#include "ftlab/pipeline.hpp"

using namespace ftlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config() {
    return json::parse(R"({
      "grid": {"d": 2, "n": 17},
      "problem": {"benchmark": {"name": "radial-power", "theta": 1.0}},
      "modulus": {"K": 64}
    })");
}

fs::path temp_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("ftlab_io_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Config, ParsesBenchmarkAndDefaults) {
    const auto cfg = parse_config(base_config());
    EXPECT_EQ(cfg.dim, 2);
    EXPECT_EQ(cfg.n, 17);
    ASSERT_TRUE(cfg.benchmark.has_value());
    EXPECT_DOUBLE_EQ(cfg.problem.f({0.1, 0.2}), 27.0 / 8.0);
    EXPECT_DOUBLE_EQ(cfg.problem.C0, 27.0 / 8.0);
    EXPECT_EQ(cfg.modulus.K, 64);
}

TEST(Config, ExplicitProblem) {
    auto j = base_config();
    j["problem"] = json::parse(R"({
      "operator": {"kind": "pucci-minus", "lambda": 0.5, "Lambda": 2.0},
      "sigma_plus": {"family": "power", "p": 2.0},
      "sigma_minus": {"family": "power-log", "p": 1.0, "q": 1.0},
      "f": {"kind": "constant", "value": -0.5},
      "g": {"kind": "affine", "a": 1.0, "b": [0.5, 0.0]},
      "q": [0.1, 0.0]
    })");
    const auto cfg = parse_config(j);
    EXPECT_FALSE(cfg.benchmark.has_value());
    EXPECT_EQ(cfg.problem.F.kind(), OperatorKind::pucci_minus);
    EXPECT_DOUBLE_EQ(cfg.problem.sigma_plus.eval(3.0), 9.0);
    EXPECT_DOUBLE_EQ(cfg.problem.C0, 0.5);
    EXPECT_DOUBLE_EQ(cfg.problem.g({1.0, 0.0}), 1.5);
    EXPECT_DOUBLE_EQ(cfg.problem.q[0], 0.1);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    auto bad = [](auto mutate) {
        auto j = base_config();
        mutate(j);
        EXPECT_THROW(parse_config(j), ConfigError) << j.dump();
    };
    bad([](json& j) { j["extra"] = 1; });
    bad([](json& j) { j["grid"]["m"] = 3; });
    bad([](json& j) { j["grid"]["n"] = 8; });
    bad([](json& j) { j["problem"]["benchmark"]["name"] = "cubic"; });
    bad([](json& j) { j["problem"]["sigma_plus"] = {{"family", "power"}, {"p", 1.0}}; });
    bad([](json& j) { j.erase("problem"); });
    bad([](json& j) { j["modulus"]["K"] = 0; });
    bad([](json& j) { j["modulus"]["delta"] = 0.5; });
    bad([](json& j) { j["problem"]["C0"] = -1.0; });
    bad([](json& j) { j["scheme"]["max_iter"] = "many"; });
    bad([](json& j) { j["lab"]["r"] = 1.5; });
    bad([](json& j) { j["seed"] = -3; });
    bad([](json& j) { j["schema"] = "ftlab.config/9"; });
}

TEST(Config, MalformedJsonFile) {
    const auto d = temp_dir("malformed");
    std::ofstream(d / "bad.json") << "{\"grid\": {\"n\": 17,,}";
    EXPECT_THROW(load_config((d / "bad.json").string()), ConfigError);
    EXPECT_THROW(load_config((d / "missing.json").string()), ConfigError);
}

TEST(FieldCsv, RoundTripIsExact) {
    for (int dim : {1, 2}) {
        const Grid g(dim, 17);
        const auto u = DiscreteField::sample(g, [](const Point& x) { return std::sin(10 * x[0]) / 3 + std::exp(x[1]); });
        const auto d = temp_dir("csv" + std::to_string(dim));
        io::write_text((d / "field.csv").string(), io::field_csv(u));
        const auto v = io::read_field_csv((d / "field.csv").string());
        ASSERT_EQ(v.grid().dim(), dim);
        ASSERT_EQ(v.grid().n(), 17);
        for (std::size_t k = 0; k < g.size(); ++k) ASSERT_EQ(u[k], v[k]);
    }
}

TEST(FieldCsv, RejectsMalformedFiles) {
    const auto d = temp_dir("csvbad");
    auto check = [&](const std::string& body) {
        std::ofstream(d / "f.csv") << body;
        EXPECT_THROW(io::read_field_csv((d / "f.csv").string()), ConfigError) << body;
    };
    check("");
    check("a,b\n1,2\n");
    check("x,value\n-1,0\n0,zero\n1,0\n");
    check("x,value\n-1,0\n0,0\n");
    check("x,y,value\n-1,-1,0\n1,-1,0\n-1,1,0\n");
    check("x,value\n-1,0\n0.3,0\n1,0\n");
}

TEST(Json, DeterministicSortedFullPrecision) {
    json j = {{"zeta", 0.1}, {"alpha", {{"b", 1}, {"a", 1.0 / 3}}}, {"mid", {1.5, std::nan(""), 2}}};
    const auto s = io::dump(j);
    EXPECT_EQ(s, io::dump(json::parse(s)));
    EXPECT_LT(s.find("\"alpha\""), s.find("\"mid\""));
    EXPECT_LT(s.find("\"mid\""), s.find("\"zeta\""));
    EXPECT_LT(s.find("\"a\""), s.find("\"b\""));
    EXPECT_NE(s.find("0.33333333333333331"), std::string::npos);
    EXPECT_NE(s.find("null"), std::string::npos);
    EXPECT_EQ(s.back(), '\n');
    EXPECT_EQ(json::parse(s)["alpha"]["a"].get<double>(), 1.0 / 3);
}

TEST(Manifest, ListsFilesWithHashes) {
    const auto d = temp_dir("manifest");
    io::write_text((d / "b.csv").string(), "x\n");
    io::write_text((d / "a.json").string(), "{}\n");
    RunManifest m("solve", "config-bytes");
    m.stage("solve", 0.5);
    m.write(d);
    const auto j = json::parse(read_bytes(d / "manifest.json"));
    EXPECT_EQ(j["command"], "solve");
    EXPECT_EQ(j["config_sha256"], sha256_hex("config-bytes"));
    ASSERT_EQ(j["files"].size(), 2u);
    EXPECT_EQ(j["files"][0]["path"], "a.json");
    EXPECT_EQ(j["files"][1]["path"], "b.csv");
    EXPECT_EQ(j["files"][1]["sha256"], sha256_hex("x\n"));
    EXPECT_EQ(j["files"][1]["bytes"], 2);
}

TEST(Manifest, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pipeline, BuildModulusReportsChecks) {
    ModulusConfig mc;
    mc.K = 128;
    const auto b = build_modulus(DegeneracyLaw::power(1.0), DegeneracyLaw::power(2.0), mc);
    EXPECT_EQ(b.table.K, 128);
    ASSERT_FALSE(b.cauchy.empty());
    for (const auto& c : b.cauchy) EXPECT_TRUE(c.ok) << c.increment << " vs " << c.tail_bound;
    const auto j = to_json(b);
    EXPECT_TRUE(j.contains("cauchy"));
    EXPECT_THROW(build_modulus(DegeneracyLaw::exponential_flat(), DegeneracyLaw::power(1.0), mc), TailError);
}

TEST(Pipeline, SequenceCsvHasOneRowPerIndex) {
    ModulusConfig mc;
    mc.K = 32;
    const auto b = build_modulus(DegeneracyLaw::power(1.0), DegeneracyLaw::power(1.0), mc);
    const auto csv = io::sequence_csv(b.table);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 33);
}
