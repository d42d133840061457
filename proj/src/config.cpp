#include "coke/config.hpp"

#include <algorithm>
#include <cstdlib>

#include "coke/error.hpp"
#include "coke/io.hpp"

namespace coke {

namespace {

const nlohmann::json& defaults() {
    static const nlohmann::json d = [] {
        const RunConfig c;
        const EndpointConfig& e = c.endpoint;
        return nlohmann::json{
            {"endpoint.base_url", e.base_url},
            {"endpoint.model", e.model},
            {"endpoint.api", "completion"},
            {"endpoint.api_key", ""},
            {"endpoint.timeout_ms", e.timeout_ms},
            {"endpoint.max_new_tokens", e.max_new_tokens},
            {"endpoint.max_parallel", e.max_parallel},
            {"endpoint.retry_count", e.retry.count},
            {"endpoint.retry_backoff_ms", e.retry.backoff_ms},
            {"endpoint.temperature", EndpointConfig::temperature},
            {"signal", std::string(to_string(c.signal))},
            {"unk_quantile", c.unk_quantile},
            {"k_quantile", c.k_quantile},
            {"seed", c.seed},
            {"out_dir", c.out_dir},
            {"templates", c.templates},
            {"cache", c.cache},
            {"max_failure_ratio", c.max_failure_ratio},
            {"balance", c.balance},
            {"train.steps", c.train_steps},
            {"train.lr", c.train_lr},
            {"train.warmup", c.train_warmup},
            {"train.con_weight", c.con_weight},
            {"toy.nuisance_dim", c.nuisance_dim},
            {"toy.nuisance_scale", c.nuisance_scale},
            {"eval.bins", c.bins},
            {"eval.demonstrations", c.demonstrations},
        };
    }();
    return d;
}

bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
    if (a.is_number() && b.is_number()) {
        // an integer setting must not receive a fraction
        return !(a.is_number_integer() && b.is_number_float());
    }
    return a.type() == b.type();
}

}  // namespace

std::vector<std::string> RunConfig::violations(bool need_endpoint) const {
    std::vector<std::string> v;
    if (need_endpoint)
        for (auto& e : endpoint.violations()) v.push_back(std::move(e));
    if (!(unk_quantile > 0.0 && unk_quantile < 1.0)) v.emplace_back("unk_quantile must lie in (0, 1)");
    if (!(k_quantile > 0.0 && k_quantile < 1.0)) v.emplace_back("k_quantile must lie in (0, 1)");
    if (unk_quantile + k_quantile > 1.0) v.emplace_back("unk_quantile + k_quantile must not exceed 1");
    if (out_dir.empty()) v.emplace_back("out_dir is empty");
    if (!(max_failure_ratio >= 0.0 && max_failure_ratio <= 1.0))
        v.emplace_back("max_failure_ratio must lie in [0, 1]");
    if (train_steps < 1) v.emplace_back("train.steps must be >= 1");
    if (!(train_lr >= 0.0)) v.emplace_back("train.lr must be >= 0");
    if (train_warmup < 0) v.emplace_back("train.warmup must be >= 0");
    if (!(con_weight >= 0.0)) v.emplace_back("train.con_weight must be >= 0");
    if (!(nuisance_scale >= 0.0)) v.emplace_back("toy.nuisance_scale must be >= 0");
    if (bins < 2) v.emplace_back("eval.bins must be >= 2");
    if (demonstrations < 1) v.emplace_back("eval.demonstrations must be >= 1");
    return v;
}

std::string RunConfig::cache_path() const { return cache.empty() ? out_dir + "/cache.jsonl" : cache; }

ConfigResolver::ConfigResolver() {
    for (const auto& [k, v] : defaults().items()) {
        values_[k] = v;
        sources_[k] = "default";
    }
}

void ConfigResolver::set(const std::string& key, const nlohmann::json& value, const std::string& source) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        pending_.push_back(source + ": unknown setting '" + key + "'");
        return;
    }
    if (!same_kind(it->second, value)) {
        pending_.push_back(source + ": '" + key + "' expects a value like " + it->second.dump() + ", got " +
                           value.dump());
        return;
    }
    it->second = value;
    sources_[key] = source;
}

void ConfigResolver::apply_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError({path + ": " + e.what()});
    }
    if (!j.is_object()) throw ConfigError({path + ": config must be a JSON object"});
    const auto flat = j.flatten();
    for (const auto& [ptr, v] : flat.items()) {
        std::string key = ptr.substr(1);
        for (auto& c : key)
            if (c == '/') c = '.';
        set(key, v, "file");
    }
}

void ConfigResolver::apply_flags(const nlohmann::json& flat) {
    for (const auto& [k, v] : flat.items()) set(k, v, "flag");
}

void ConfigResolver::apply_env() {
    if (const char* key = std::getenv("COKE_API_KEY"); key && *key) {
        values_["endpoint.api_key"] = key;
        sources_["endpoint.api_key"] = "env";
    }
}

RunConfig ConfigResolver::resolve(bool need_endpoint) const {
    std::vector<std::string> v = pending_;
    if (sources_.at("endpoint.api_key") == "file" || sources_.at("endpoint.api_key") == "flag")
        v.emplace_back("endpoint.api_key may only come from the COKE_API_KEY environment variable");
    if (values_.at("endpoint.temperature").get<double>() != 0.0)
        v.emplace_back("endpoint.temperature must be 0: probing uses greedy decoding only");

    RunConfig c;
    auto& e = c.endpoint;
    const auto& val = values_;
    e.base_url = val.at("endpoint.base_url").get<std::string>();
    e.model = val.at("endpoint.model").get<std::string>();
    e.api_key = val.at("endpoint.api_key").get<std::string>();
    const auto api = val.at("endpoint.api").get<std::string>();
    if (api == "completion") e.api = ApiStyle::Completion;
    else if (api == "chat") e.api = ApiStyle::Chat;
    else v.push_back("endpoint.api must be 'completion' or 'chat', got '" + api + "'");
    e.timeout_ms = val.at("endpoint.timeout_ms").get<int>();
    e.max_new_tokens = val.at("endpoint.max_new_tokens").get<int>();
    e.max_parallel = val.at("endpoint.max_parallel").get<int>();
    e.retry.count = val.at("endpoint.retry_count").get<int>();
    e.retry.backoff_ms = val.at("endpoint.retry_backoff_ms").get<int>();
    try {
        c.signal = parse_signal_kind(val.at("signal").get<std::string>());
    } catch (const InvalidInput& ex) {
        v.emplace_back(ex.what());
    }
    c.unk_quantile = val.at("unk_quantile").get<double>();
    c.k_quantile = val.at("k_quantile").get<double>();
    const auto seed = val.at("seed");
    if (seed.is_number_integer() && seed.get<std::int64_t>() < 0 && !seed.is_number_unsigned())
        v.emplace_back("seed must be non-negative");
    else
        c.seed = seed.get<std::uint64_t>();
    c.out_dir = val.at("out_dir").get<std::string>();
    c.templates = val.at("templates").get<std::string>();
    c.cache = val.at("cache").get<std::string>();
    c.max_failure_ratio = val.at("max_failure_ratio").get<double>();
    c.balance = val.at("balance").get<bool>();
    c.train_steps = val.at("train.steps").get<long>();
    c.train_lr = val.at("train.lr").get<double>();
    c.train_warmup = val.at("train.warmup").get<long>();
    c.con_weight = val.at("train.con_weight").get<double>();
    const auto nd = val.at("toy.nuisance_dim").get<long long>();
    if (nd < 0) v.emplace_back("toy.nuisance_dim must be >= 0");
    c.nuisance_dim = static_cast<std::size_t>(std::max(0LL, nd));
    c.nuisance_scale = val.at("toy.nuisance_scale").get<double>();
    c.bins = static_cast<std::size_t>(std::max(0LL, val.at("eval.bins").get<long long>()));
    c.demonstrations = static_cast<std::size_t>(std::max(0LL, val.at("eval.demonstrations").get<long long>()));

    for (auto& x : c.violations(need_endpoint)) v.push_back(std::move(x));
    if (!v.empty()) throw ConfigError(std::move(v));
    return c;
}

nlohmann::json ConfigResolver::resolved_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_)
        j[k] = (k == "endpoint.api_key" && !v.get<std::string>().empty()) ? nlohmann::json("***") : v;
    return j;
}

std::string ConfigResolver::describe() const {
    std::string out;
    const auto j = resolved_json();
    for (const auto& [k, v] : j.items()) out += "  " + k + " = " + v.dump() + " (" + sources_.at(k) + ")\n";
    return out;
}

}  // namespace coke
