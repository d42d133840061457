#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "coke/partition.hpp"

namespace coke {

inline constexpr const char* kToolkitVersion = "0.3.0";

// Written next to the outputs of every CLI run.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config;  // resolved, secrets masked
    std::vector<SourceFile> inputs;
    std::vector<SourceFile> outputs;
    std::uint64_t seed = 0;
    std::string started_at;
    double elapsed_ms = 0.0;
    nlohmann::json details = nlohmann::json::object();

    // Checksums the files at `paths` and records them.
    void add_inputs(const std::vector<std::string>& paths);
    void add_outputs(const std::vector<std::string>& paths);

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static RunManifest load(const std::string& path);
};

// Files whose current checksum differs from the one recorded, with reasons.
std::vector<std::string> verify_manifest(const RunManifest& m);

}  // namespace coke
