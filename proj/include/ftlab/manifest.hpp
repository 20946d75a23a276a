#pragma once

// Run manifest: SHA-256 of the config and of every emitted file, plus
// per-stage wall times. Needs OpenSSL's libcrypto.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"

namespace ftlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw InternalError("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class RunManifest {
   public:
    static constexpr const char* kFileName = "manifest.json";

    RunManifest(std::string command, std::string config_bytes)
        : command_(std::move(command)), config_hash_(sha256_hex(config_bytes)) {}

    void stage(const std::string& name, double seconds) { stages_[name] += seconds; }

    /// Lists every regular file in dir except the manifest itself, then writes it.
    void write(const std::filesystem::path& dir) const {
        std::vector<std::string> names;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.is_regular_file() && e.path().filename() != kFileName) names.push_back(e.path().filename().string());
        std::sort(names.begin(), names.end());
        nlohmann::json files = nlohmann::json::array();
        for (const auto& n : names) {
            const auto bytes = read_bytes(dir / n);
            files.push_back({{"path", n}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
        }
        nlohmann::json times = nlohmann::json::object();
        for (const auto& [k, v] : stages_) times[k] = v;
        nlohmann::json j = {{"schema", "ftlab.manifest/1"},
                            {"command", command_},
                            {"config_sha256", config_hash_},
                            {"versions", {{"ftlab", kArtifactVersion}, {"nlohmann_json", nlohmann_version()}}},
                            {"wall_seconds", times},
                            {"files", files}};
        io::write_json((dir / kFileName).string(), j);
    }

   private:
    static std::string nlohmann_version() {
        return std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
               std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    }

    std::string command_;
    std::string config_hash_;
    std::map<std::string, double> stages_;
};

}  // namespace ftlab
