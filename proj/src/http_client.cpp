#include "coke/http_client.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace coke {

namespace {

// Splits "http://host:port/prefix" into the origin and the path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

}  // namespace

HttpCompletionClient::HttpCompletionClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    auto [origin, prefix] = split_url(cfg_.base_url);
    scheme_host_port_ = origin;
    const bool has_v1 = prefix.size() >= 3 && prefix.compare(prefix.size() - 3, 3, "/v1") == 0;
    path_ = prefix + (has_v1 ? "" : "/v1") +
            (cfg_.api == ApiStyle::Chat ? "/chat/completions" : "/completions");
}

std::string HttpCompletionClient::envelope(std::string_view prompt) const {
    if (cfg_.api == ApiStyle::Completion) return std::string(prompt);
    return nlohmann::json::array({{{"role", "user"}, {"content", prompt}}}).dump();
}

std::string HttpCompletionClient::request_body(const CompletionRequest& request) const {
    nlohmann::json body = {{"model", cfg_.model},
                           {"max_tokens", request.max_new_tokens},
                           {"temperature", EndpointConfig::temperature},
                           {"stop", request.stop}};
    if (cfg_.api == ApiStyle::Completion) {
        body["prompt"] = request.prompt;
        body["logprobs"] = 1;
    } else {
        body["messages"] = nlohmann::json::parse(envelope(request.prompt));
        body["logprobs"] = true;
        body["top_logprobs"] = 1;
    }
    return body.dump();
}

Completion HttpCompletionClient::parse_response(std::string_view body) const {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("unparseable response body: ") + e.what());
    }
    Completion c;
    c.model_id = j.value("model", cfg_.model);
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw TransportError("response has no choices");
    const auto& choice = j["choices"][0];
    if (!choice.contains("logprobs") || choice["logprobs"].is_null())
        throw CapabilityError("endpoint " + cfg_.base_url + " returned no token log-probabilities");
    const auto& lp = choice["logprobs"];
    try {
        if (cfg_.api == ApiStyle::Completion) {
            const auto& toks = lp.at("tokens");
            const auto& vals = lp.at("token_logprobs");
            for (std::size_t i = 0; i < toks.size() && i < vals.size(); ++i) {
                if (vals[i].is_null()) continue;  // some servers null the prompt echo
                c.tokens.push_back(toks[i].get<std::string>());
                c.logprobs.push_back(vals[i].get<double>());
            }
        } else {
            for (const auto& item : lp.at("content")) {
                c.tokens.push_back(item.at("token").get<std::string>());
                c.logprobs.push_back(item.at("logprob").get<double>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw CapabilityError(std::string("endpoint log-probability payload is malformed: ") + e.what());
    }
    return c;
}

Completion HttpCompletionClient::complete(const CompletionRequest& request) {
    httplib::Client http(scheme_host_port_);
    const auto sec = cfg_.timeout_ms / 1000;
    const auto usec = (cfg_.timeout_ms % 1000) * 1000;
    http.set_connection_timeout(sec, usec);
    http.set_read_timeout(sec, usec);
    http.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    auto res = http.Post(path_, headers, request_body(request), "application/json");
    if (!res) throw TransportError("request to " + cfg_.base_url + " failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
    if (res->status != 200)
        throw Error("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    return parse_response(res->body);
}

}  // namespace coke
