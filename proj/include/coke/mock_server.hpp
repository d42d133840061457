#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "coke/probe.hpp"

namespace httplib {
class Server;
}

namespace coke {

// Serves any CompletionClient over the OpenAI-style completion and chat
// routes, so the HTTP client can be exercised end to end without a model.
class MockCompletionServer {
public:
    explicit MockCompletionServer(CompletionClient& backend);
    ~MockCompletionServer();

    MockCompletionServer(const MockCompletionServer&) = delete;
    MockCompletionServer& operator=(const MockCompletionServer&) = delete;

    // Binds to host:port (port 0 picks a free one) and serves on a background
    // thread. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    // Blocks serving on the calling thread.
    void listen(const std::string& host, int port);
    void stop();

    // When false, responses omit log-probabilities like a capability-less endpoint.
    void set_logprobs(bool enabled) noexcept { logprobs_ = enabled; }
    // The next `n` requests fail with HTTP 503.
    void fail_next(int n) noexcept { fail_next_ = n; }

    std::string base_url() const;

private:
    void install_routes();

    CompletionClient& backend_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_;
    int port_ = 0;
    std::atomic<bool> logprobs_{true};
    std::atomic<int> fail_next_{0};
};

}  // namespace coke
