#include "coke/mock_server.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

namespace coke {

MockCompletionServer::MockCompletionServer(CompletionClient& backend)
    : backend_(backend), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

MockCompletionServer::~MockCompletionServer() { stop(); }

void MockCompletionServer::install_routes() {
    auto handle = [this](const httplib::Request& req, httplib::Response& res, bool chat) {
        if (fail_next_.load() > 0) {
            --fail_next_;
            res.status = 503;
            res.set_content(R"({"error":"overloaded"})", "application/json");
            return;
        }
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
            return;
        }
        CompletionRequest cr;
        cr.max_new_tokens = body.value("max_tokens", 32);
        if (body.contains("stop")) cr.stop = body["stop"].get<std::vector<std::string>>();
        cr.prompt = chat ? body.at("messages").back().at("content").get<std::string>()
                         : body.at("prompt").get<std::string>();

        Completion c = backend_.complete(cr);
        std::string text;
        for (const auto& t : c.tokens) text += t;

        nlohmann::json choice = {{"index", 0}, {"finish_reason", "stop"}};
        nlohmann::json logprobs = nullptr;
        if (logprobs_) {
            if (chat) {
                logprobs = {{"content", nlohmann::json::array()}};
                for (std::size_t i = 0; i < c.tokens.size(); ++i)
                    logprobs["content"].push_back({{"token", c.tokens[i]}, {"logprob", c.logprobs[i]}});
            } else {
                logprobs = {{"tokens", c.tokens}, {"token_logprobs", c.logprobs}};
            }
        }
        choice["logprobs"] = logprobs;
        if (chat) choice["message"] = {{"role", "assistant"}, {"content", text}};
        else choice["text"] = text;
        nlohmann::json out = {{"model", c.model_id.empty() ? body.value("model", "mock") : c.model_id},
                              {"choices", nlohmann::json::array({choice})}};
        res.set_content(out.dump(), "application/json");
    };
    server_->Post("/v1/completions",
                  [handle](const httplib::Request& q, httplib::Response& r) { handle(q, r, false); });
    server_->Post("/v1/chat/completions",
                  [handle](const httplib::Request& q, httplib::Response& r) { handle(q, r, true); });
}

int MockCompletionServer::start(const std::string& host, int port) {
    host_ = host;
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error("cannot bind mock server to " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void MockCompletionServer::listen(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!server_->listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void MockCompletionServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockCompletionServer::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace coke
