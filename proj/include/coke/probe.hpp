#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coke/error.hpp"
#include "coke/prompts.hpp"
#include "coke/signals.hpp"

namespace coke {

class CacheStore;

struct QuestionRecord {
    std::string id;
    std::string text;
    std::vector<std::string> gold_answers;  // empty for unlabeled data
    std::string source;

    friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

nlohmann::json to_json(const QuestionRecord& q);
QuestionRecord question_from_json(const nlohmann::json& j);

// Reads line-delimited question records; rejects duplicate ids and empty text.
std::vector<QuestionRecord> load_questions(const std::string& path);
void save_questions(const std::string& path, const std::vector<QuestionRecord>& questions);

// Stop rule recorded with every probe result: generation ends at the first
// newline or end-of-sequence token.
inline constexpr std::string_view kStopRule = "newline";

struct ProbeResult {
    std::string question_id;
    std::string prompt_text;  // exactly what the endpoint saw (post-envelope)
    std::string prediction;   // trimmed concatenation of token_probs.tokens
    TokenProbSequence token_probs;
    SignalSet signals;
    std::string model_id;
    std::string created_at;

    double confidence(SignalKind kind) const { return signals[kind].value; }
};

nlohmann::json to_json(const ProbeResult& r);
// Rejects records whose stored signals do not recompute exactly.
ProbeResult probe_result_from_json(const nlohmann::json& j);

std::vector<ProbeResult> load_probe_results(const std::string& path);
void save_probe_results(const std::string& path, const std::vector<ProbeResult>& results);

enum class ApiStyle { Completion, Chat };

struct RetryPolicy {
    int count = 3;         // extra attempts after the first
    int backoff_ms = 200;  // doubled after every failed attempt
};

struct EndpointConfig {
    std::string base_url;
    std::string model;
    std::string api_key;  // from the environment only
    ApiStyle api = ApiStyle::Completion;
    int timeout_ms = 30000;
    int max_new_tokens = 32;
    int max_parallel = 4;
    RetryPolicy retry;
    std::vector<std::string> stop = {"\n"};

    // Greedy decoding is the only mode a probe run uses.
    static constexpr double temperature = 0.0;

    // Returns every violation; empty when valid.
    std::vector<std::string> violations() const;
};

struct CompletionRequest {
    std::string prompt;  // rendered template, before any chat envelope
    int max_new_tokens = 32;
    std::vector<std::string> stop;
};

struct Completion {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
    std::string model_id;
};

// A text-generation endpoint reporting per-token log-probabilities.
// Implementations throw TransportError for retryable failures and
// CapabilityError when token log-probabilities are unavailable.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;

    virtual Completion complete(const CompletionRequest& request) = 0;

    // The string the model actually conditions on; chat clients wrap the
    // prompt in their envelope. Cache keys use this form.
    virtual std::string envelope(std::string_view prompt) const { return std::string(prompt); }
};

// Tokens surviving the stop rule: leading whitespace-only tokens are skipped,
// generation is cut at the first stop string or end-of-sequence marker, and at
// most max_new_tokens tokens are kept.
Completion apply_stop_rule(const Completion& raw, int max_new_tokens,
                           const std::vector<std::string>& stop);

ProbeResult probe_question(const EndpointConfig& cfg, CompletionClient& client,
                           const QuestionRecord& q, const PromptTemplate& tmpl,
                           CacheStore* cache = nullptr);

struct ProbeFailure {
    std::string question_id;
    std::string message;
};

struct ProbeBatch {
    std::vector<ProbeResult> results;  // successes, in input order
    std::vector<ProbeFailure> failures;
    std::size_t cache_hits = 0;
};

class ProbeRunError : public Error {
public:
    ProbeRunError(std::vector<ProbeFailure> failures, std::size_t total, double limit);
    const std::vector<ProbeFailure>& failures() const noexcept { return failures_; }

private:
    std::vector<ProbeFailure> failures_;
};

struct ProbeOptions {
    double max_failure_ratio = 0.01;
};

// Bounded-parallel fan-out over the questions. Throws ProbeRunError when the
// failure ratio exceeds the limit and CapabilityError as soon as the endpoint
// shows it cannot report log-probabilities.
ProbeBatch probe_dataset(const EndpointConfig& cfg, CompletionClient& client,
                         const std::vector<QuestionRecord>& questions, const PromptTemplate& tmpl,
                         CacheStore* cache = nullptr, const ProbeOptions& options = {});

}  // namespace coke
