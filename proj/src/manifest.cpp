#include "coke/manifest.hpp"

#include <filesystem>

#include "coke/error.hpp"
#include "coke/io.hpp"

namespace coke {

namespace {

nlohmann::json files_json(const std::vector<SourceFile>& files) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : files) a.push_back({{"path", f.path}, {"checksum", f.checksum}});
    return a;
}

std::vector<SourceFile> files_from(const nlohmann::json& a) {
    std::vector<SourceFile> out;
    for (const auto& f : a) out.push_back({f.at("path").get<std::string>(), f.at("checksum").get<std::string>()});
    return out;
}

}  // namespace

void RunManifest::add_inputs(const std::vector<std::string>& paths) {
    for (const auto& p : paths) inputs.push_back({p, io::file_checksum(p)});
}

void RunManifest::add_outputs(const std::vector<std::string>& paths) {
    for (const auto& p : paths) outputs.push_back({p, io::file_checksum(p)});
}

nlohmann::json RunManifest::to_json() const {
    return {{"subcommand", subcommand},
            {"toolkit_version", kToolkitVersion},
            {"seed", seed},
            {"config", config},
            {"inputs", files_json(inputs)},
            {"outputs", files_json(outputs)},
            {"started_at", started_at},
            {"elapsed_ms", elapsed_ms},
            {"details", details}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.subcommand = j.at("subcommand").get<std::string>();
        m.config = j.value("config", nlohmann::json::object());
        m.inputs = files_from(j.at("inputs"));
        m.outputs = files_from(j.at("outputs"));
        m.seed = j.value("seed", std::uint64_t{0});
        m.started_at = j.value("started_at", std::string{});
        m.elapsed_ms = j.value("elapsed_ms", 0.0);
        m.details = j.value("details", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed run manifest: ") + e.what());
    }
    return m;
}

void RunManifest::save(const std::string& path) const { io::write_file(path, to_json().dump(2) + "\n"); }

RunManifest RunManifest::load(const std::string& path) {
    try {
        return from_json(nlohmann::json::parse(io::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path, e.what());
    }
}

std::vector<std::string> verify_manifest(const RunManifest& m) {
    std::vector<std::string> bad;
    for (const auto& f : m.outputs) {
        if (!std::filesystem::exists(f.path)) {
            bad.push_back(f.path + ": missing");
            continue;
        }
        const auto now = io::file_checksum(f.path);
        if (now != f.checksum) bad.push_back(f.path + ": checksum " + now + ", manifest says " + f.checksum);
    }
    return bad;
}

}  // namespace coke
