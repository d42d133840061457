#include "coke/probe.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_set>

#include "coke/cache.hpp"
#include "coke/io.hpp"

namespace coke {

namespace {

constexpr std::string_view kEosMarkers[] = {"</s>", "<|endoftext|>", "<|eot_id|>", "<|im_end|>",
                                            "<eos>"};

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool is_eos(std::string_view tok) {
    return std::find(std::begin(kEosMarkers), std::end(kEosMarkers), tok) != std::end(kEosMarkers);
}

}  // namespace

nlohmann::json to_json(const QuestionRecord& q) {
    return {{"id", q.id}, {"text", q.text}, {"gold_answers", q.gold_answers}, {"source", q.source}};
}

QuestionRecord question_from_json(const nlohmann::json& j) {
    QuestionRecord q;
    try {
        q.id = j.at("id").get<std::string>();
        q.text = j.at("text").get<std::string>();
        if (j.contains("gold_answers") && !j["gold_answers"].is_null())
            q.gold_answers = j["gold_answers"].get<std::vector<std::string>>();
        q.source = j.value("source", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed question record: ") + e.what());
    }
    if (q.id.empty()) throw InvalidInput("question record has an empty id");
    if (q.text.empty()) throw InvalidInput("question " + q.id + " has empty text");
    return q;
}

std::vector<QuestionRecord> load_questions(const std::string& path) {
    std::vector<QuestionRecord> out;
    std::unordered_set<std::string> seen;
    for (const auto& j : io::read_jsonl(path)) {
        out.push_back(question_from_json(j));
        if (!seen.insert(out.back().id).second)
            throw InvalidInput(path + ": duplicate question id " + out.back().id);
    }
    return out;
}

void save_questions(const std::string& path, const std::vector<QuestionRecord>& questions) {
    std::vector<nlohmann::json> lines;
    lines.reserve(questions.size());
    for (const auto& q : questions) lines.push_back(to_json(q));
    io::write_file(path, io::to_jsonl(lines));
}

nlohmann::json to_json(const ProbeResult& r) {
    nlohmann::json signals = nlohmann::json::object();
    for (SignalKind k : kAllSignalKinds) signals[std::string(to_string(k))] = r.signals[k].value;
    return {{"question_id", r.question_id},
            {"prompt_text", r.prompt_text},
            {"prediction", r.prediction},
            {"tokens", r.token_probs.tokens},
            {"probs", r.token_probs.probs},
            {"signals", signals},
            {"model_id", r.model_id},
            {"created_at", r.created_at},
            {"stop_rule", kStopRule}};
}

ProbeResult probe_result_from_json(const nlohmann::json& j) {
    ProbeResult r;
    try {
        r.question_id = j.at("question_id").get<std::string>();
        r.prompt_text = j.at("prompt_text").get<std::string>();
        r.prediction = j.at("prediction").get<std::string>();
        r.token_probs.tokens = j.at("tokens").get<std::vector<std::string>>();
        r.token_probs.probs = j.at("probs").get<std::vector<double>>();
        r.model_id = j.value("model_id", std::string{});
        r.created_at = j.value("created_at", std::string{});
        r.signals = compute_all_signals(r.token_probs);
        const auto& stored = j.at("signals");
        for (SignalKind k : kAllSignalKinds) {
            const double v = stored.at(std::string(to_string(k))).get<double>();
            if (v != r.signals[k].value)
                throw InvalidInput("question " + r.question_id + ": stored " +
                                   std::string(to_string(k)) + " does not match its token probabilities");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed probe record: ") + e.what());
    }
    return r;
}

std::vector<ProbeResult> load_probe_results(const std::string& path) {
    std::vector<ProbeResult> out;
    for (const auto& j : io::read_jsonl(path)) out.push_back(probe_result_from_json(j));
    return out;
}

void save_probe_results(const std::string& path, const std::vector<ProbeResult>& results) {
    std::vector<nlohmann::json> lines;
    lines.reserve(results.size());
    for (const auto& r : results) lines.push_back(to_json(r));
    io::write_file(path, io::to_jsonl(lines));
}

std::vector<std::string> EndpointConfig::violations() const {
    std::vector<std::string> v;
    if (base_url.empty()) v.emplace_back("endpoint base_url is empty");
    if (model.empty()) v.emplace_back("endpoint model name is empty");
    if (timeout_ms <= 0) v.emplace_back("timeout_ms must be positive");
    if (max_new_tokens < 1) v.emplace_back("max_new_tokens must be >= 1");
    if (max_parallel < 1) v.emplace_back("max_parallel must be >= 1");
    if (retry.count < 0) v.emplace_back("retry count must be >= 0");
    if (retry.backoff_ms < 0) v.emplace_back("retry backoff_ms must be >= 0");
    return v;
}

Completion apply_stop_rule(const Completion& raw, int max_new_tokens,
                           const std::vector<std::string>& stop) {
    if (raw.tokens.size() != raw.logprobs.size())
        throw InvalidInput("completion has " + std::to_string(raw.tokens.size()) + " tokens but " +
                           std::to_string(raw.logprobs.size()) + " log-probabilities");
    Completion out;
    out.model_id = raw.model_id;
    std::size_t i = 0;
    while (i < raw.tokens.size() && is_blank(raw.tokens[i])) ++i;
    for (; i < raw.tokens.size(); ++i) {
        if (static_cast<int>(out.tokens.size()) >= max_new_tokens) break;
        const std::string& tok = raw.tokens[i];
        if (is_eos(tok)) break;
        std::size_t cut = std::string::npos;
        for (const auto& s : stop)
            if (!s.empty()) cut = std::min(cut, tok.find(s));
        if (cut != std::string::npos) {
            // Keep a partial token only when it carries visible text.
            if (!is_blank(tok.substr(0, cut))) {
                out.tokens.push_back(tok.substr(0, cut));
                out.logprobs.push_back(raw.logprobs[i]);
            }
            break;
        }
        out.tokens.push_back(tok);
        out.logprobs.push_back(raw.logprobs[i]);
    }
    return out;
}

ProbeResult probe_question(const EndpointConfig& cfg, CompletionClient& client,
                           const QuestionRecord& q, const PromptTemplate& tmpl, CacheStore* cache) {
    const std::string rendered = render(tmpl, q.text);
    const CacheKey key{cfg.model, client.envelope(rendered), cfg.max_new_tokens, cfg.stop};

    if (cache) {
        if (auto hit = cache->lookup(key)) {
            try {
                ProbeResult r = probe_result_from_json(nlohmann::json::parse(*hit));
                r.question_id = q.id;
                return r;
            } catch (const std::exception&) {
                // fall through to a fresh probe
            }
        }
    }

    const CompletionRequest request{rendered, cfg.max_new_tokens, cfg.stop};
    Completion raw;
    int backoff = cfg.retry.backoff_ms;
    for (int attempt = 0;; ++attempt) {
        try {
            raw = client.complete(request);
            break;
        } catch (const TransportError& e) {
            if (attempt >= cfg.retry.count)
                throw ProbeError(q.id, "transport failure after " + std::to_string(attempt + 1) +
                                           " attempt(s): " + e.what());
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        } catch (const CapabilityError&) {
            throw;
        } catch (const Error& e) {
            throw ProbeError(q.id, e.what());
        }
    }

    Completion kept;
    try {
        kept = apply_stop_rule(raw, cfg.max_new_tokens, cfg.stop);
    } catch (const InvalidInput& e) {
        throw ProbeError(q.id, e.what());
    }
    if (kept.tokens.empty()) throw ProbeError(q.id, "endpoint returned an empty prediction");

    ProbeResult r;
    r.question_id = q.id;
    r.prompt_text = key.prompt;
    try {
        r.token_probs = TokenProbSequence::from_logprobs(kept.tokens, kept.logprobs);
    } catch (const InvalidInput& e) {
        throw ProbeError(q.id, e.what());
    }
    std::string joined;
    for (const auto& t : r.token_probs.tokens) joined += t;
    r.prediction = trim(joined);
    r.signals = compute_all_signals(r.token_probs);
    r.model_id = kept.model_id.empty() ? cfg.model : kept.model_id;
    r.created_at = io::utc_timestamp();

    if (cache) cache->insert(key, to_json(r).dump());
    return r;
}

namespace {

std::string describe_failures(const std::vector<ProbeFailure>& failures, std::size_t total,
                              double limit) {
    char head[160];
    std::snprintf(head, sizeof head, "%zu of %zu questions failed to probe (limit %.2f%%)",
                  failures.size(), total, limit * 100.0);
    std::string out = head;
    for (const auto& f : failures) out += "\n  " + f.question_id + ": " + f.message;
    return out;
}

}  // namespace

ProbeRunError::ProbeRunError(std::vector<ProbeFailure> failures, std::size_t total, double limit)
    : Error(describe_failures(failures, total, limit)), failures_(std::move(failures)) {}

ProbeBatch probe_dataset(const EndpointConfig& cfg, CompletionClient& client,
                         const std::vector<QuestionRecord>& questions, const PromptTemplate& tmpl,
                         CacheStore* cache, const ProbeOptions& options) {
    if (questions.empty()) throw InvalidInput("no questions to probe");

    const std::size_t n = questions.size();
    std::vector<std::optional<ProbeResult>> slots(n);
    std::vector<std::optional<std::string>> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> hits{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&] {
        for (;;) {
            if (abort.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            const auto& q = questions[i];
            try {
                const bool cached =
                    cache && cache->lookup({cfg.model, client.envelope(render(tmpl, q.text)),
                                            cfg.max_new_tokens, cfg.stop});
                slots[i] = probe_question(cfg, client, q, tmpl, cache);
                if (cached) ++hits;
            } catch (const ProbeError& e) {
                errors[i] = e.what();
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                abort = true;
                return;
            }
        }
    };

    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, cfg.max_parallel)), n);
    {
        std::vector<std::jthread> pool;
        pool.reserve(width);
        for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);

    ProbeBatch batch;
    batch.cache_hits = hits.load();
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) batch.results.push_back(std::move(*slots[i]));
        else batch.failures.push_back({questions[i].id, errors[i].value_or("not probed")});
    }
    const double ratio = static_cast<double>(batch.failures.size()) / static_cast<double>(n);
    if (ratio > options.max_failure_ratio)
        throw ProbeRunError(batch.failures, n, options.max_failure_ratio);
    return batch;
}

}  // namespace coke
