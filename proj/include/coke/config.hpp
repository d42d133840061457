#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coke/probe.hpp"
#include "coke/signals.hpp"

namespace coke {

// Everything a run can be configured with. Values resolve as
// flags > config file > built-in defaults; the API key only comes from the
// environment (COKE_API_KEY).
struct RunConfig {
    EndpointConfig endpoint;
    SignalKind signal = SignalKind::MinProb;
    double unk_quantile = 0.10;
    double k_quantile = 0.20;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string templates;  // empty: built-in wording
    std::string cache;      // empty: <out_dir>/cache.jsonl
    double max_failure_ratio = 0.01;
    bool balance = false;

    long train_steps = 2000;
    double train_lr = 0.025;
    long train_warmup = 600;
    double con_weight = 1.0;
    std::size_t nuisance_dim = 6;
    double nuisance_scale = 0.5;

    std::size_t bins = 10;
    std::size_t demonstrations = 8;

    std::vector<std::string> violations(bool need_endpoint) const;
    std::string cache_path() const;
};

class ConfigResolver {
public:
    ConfigResolver();

    // Nested JSON object; unknown keys are violations.
    void apply_file(const std::string& path);
    // Flat dotted keys, e.g. {"endpoint.model": "x"}.
    void apply_flags(const nlohmann::json& flat);
    void apply_env();

    // Throws ConfigError listing every violation.
    RunConfig resolve(bool need_endpoint) const;

    // One "key = value (source)" line per setting, secrets masked.
    std::string describe() const;
    // Resolved values as a flat object, secrets masked.
    nlohmann::json resolved_json() const;

private:
    void set(const std::string& key, const nlohmann::json& value, const std::string& source);

    std::map<std::string, nlohmann::json> values_;
    std::map<std::string, std::string> sources_;
    std::vector<std::string> pending_;  // violations found while layering
};

}  // namespace coke
