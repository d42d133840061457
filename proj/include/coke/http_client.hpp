#pragma once

#include <string>
#include <string_view>

#include "coke/probe.hpp"

namespace coke {

// OpenAI-style HTTP client. Completion style posts to {base}/v1/completions
// with `logprobs: 1`; chat style posts to {base}/v1/chat/completions with
// `logprobs: true` and wraps the prompt as a single user message.
class HttpCompletionClient final : public CompletionClient {
public:
    explicit HttpCompletionClient(EndpointConfig cfg);

    Completion complete(const CompletionRequest& request) override;
    std::string envelope(std::string_view prompt) const override;

    // Request body the client would send; exposed for wire-format tests.
    std::string request_body(const CompletionRequest& request) const;
    // Parses a response body; throws CapabilityError when log-probabilities are absent.
    Completion parse_response(std::string_view body) const;

private:
    EndpointConfig cfg_;
    std::string scheme_host_port_;
    std::string path_;
};

}  // namespace coke
