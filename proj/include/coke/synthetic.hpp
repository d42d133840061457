#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coke/probe.hpp"

namespace coke {

// A desk-scale question universe with a planted confidence signal: answerable
// questions get a high Min-Prob band, unanswerable ones a low band, and the
// two bands overlap.
struct SyntheticSpec {
    std::size_t size = 500;
    double answerable_fraction = 0.6;
    double high_lo = 0.40, high_hi = 1.00;
    double low_lo = 0.02, low_hi = 0.50;
    std::uint64_t seed = 7;
    std::string source = "synthetic";
};

struct SyntheticItem {
    std::string id;
    std::string text;
    std::string gold;
    std::string prediction;  // the greedy answer; equals gold iff answerable
    bool answerable = false;
    double confidence = 0.0;  // planted Min-Prob of the greedy answer
};

class SyntheticUniverse {
public:
    static SyntheticUniverse generate(const SyntheticSpec& spec);
    static SyntheticUniverse from_json(const nlohmann::json& j);
    static SyntheticUniverse load(const std::string& path);

    nlohmann::json to_json() const;
    void save(const std::string& path) const;

    const SyntheticSpec& spec() const noexcept { return spec_; }
    const std::vector<SyntheticItem>& items() const noexcept { return items_; }

    std::vector<QuestionRecord> questions(bool with_gold = true) const;

    // The item whose question text occurs last in the prompt, or nullptr.
    const SyntheticItem* find_in_prompt(std::string_view prompt) const;

private:
    SyntheticSpec spec_;
    std::vector<SyntheticItem> items_;
};

// Deterministic in-process stand-in for a logprob-capable completion endpoint,
// answering every prompt family the toolkit sends (direct probes, the prior and
// posterior baselines, in-context IDK, verbalized confidence).
class SyntheticEndpoint final : public CompletionClient {
public:
    explicit SyntheticEndpoint(const SyntheticUniverse& universe, std::string model_id = "synthetic-7b");

    Completion complete(const CompletionRequest& request) override;

    std::size_t calls() const noexcept { return calls_.load(); }
    void reset_calls() noexcept { calls_ = 0; }

private:
    const SyntheticUniverse& universe_;
    std::string model_id_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace coke
