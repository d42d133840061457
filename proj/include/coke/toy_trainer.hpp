#pragma once

// Desk-scale stand-in for the fine-tuned model. A frozen feature extractor maps
// each prompt to [1, confidence, prompt-specific nuisance...]; the trainable
// "expression" weights score two candidates per prompt (commit to the answer
// or express the boundary) and P(y|x) is the softmax over them.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "coke/dataset.hpp"
#include "coke/prompts.hpp"

namespace coke {

struct ToyPrompt {
    AwarenessKind kind = AwarenessKind::Direct;
    std::string text;
    double confidence = 0.0;  // the model's own signal for the question
};

enum class Role { Commit, Abstain };

struct FeatureConfig {
    std::size_t nuisance_dim = 6;
    double nuisance_scale = 0.5;
    std::uint64_t seed = 0;

    std::size_t dim() const noexcept { return 2 + nuisance_dim; }
};

// Frozen; depends only on the prompt text, its kind-free confidence and the seed.
std::vector<double> extract_features(const FeatureConfig& cfg, const ToyPrompt& prompt);

struct InitConfig {
    // Commit bias per kind (prior, direct, posterior): an untuned chat model
    // answers directly, leans towards "Sure", and is undecided about "Yes".
    std::array<double, 3> commit_bias = {0.0, 4.0, 1.5};
    double nuisance_weight_scale = 0.5;
    std::uint64_t seed = 0;
};

class ToyModel {
public:
    ToyModel(FeatureConfig features, const TemplateSet& templates, InitConfig init = {});

    static ToyModel from_checkpoint(const std::string& path);
    void save_checkpoint(const std::string& path, const nlohmann::json& extra = {}) const;

    std::span<double> params() noexcept { return theta_; }
    std::span<const double> params() const noexcept { return theta_; }
    std::size_t dimension() const noexcept { return theta_.size(); }
    const FeatureConfig& feature_config() const noexcept { return features_; }
    const InitConfig& init_config() const noexcept { return init_; }

    // Answers the Direct prompt may commit to.
    void add_answers(std::span<const std::string> answers);
    void add_answers_from(const std::vector<ConsistencyGroup>& groups);
    bool knows_answer(const std::string& a) const { return answers_.contains(a); }

    // Throws InvalidInput when the target is outside the candidate vocabulary.
    Role role_of(AwarenessKind kind, const std::string& target) const;

    // Offset of the weight block for (kind, role) inside params().
    std::size_t block(AwarenessKind kind, Role role) const noexcept;

    std::array<double, 2> scores(std::span<const double> features, AwarenessKind kind) const;
    // {P(commit), P(abstain)}
    std::array<double, 2> probabilities(const ToyPrompt& prompt) const;

    // Greedy response: the recalled answer / commit phrase, or the abstain phrase.
    std::string respond(const ToyPrompt& prompt, const std::string& recalled_answer) const;

    const std::string& abstain_phrase(AwarenessKind k) const { return abstain_[static_cast<int>(k)]; }
    const std::string& commit_phrase(AwarenessKind k) const { return commit_[static_cast<int>(k)]; }

private:
    ToyModel() = default;

    FeatureConfig features_;
    InitConfig init_;
    std::array<std::string, 3> commit_;
    std::array<std::string, 3> abstain_;
    std::unordered_set<std::string> answers_;
    std::vector<double> theta_;
};

struct LossBreakdown {
    double l_unsup = 0.0;
    double l_con = 0.0;
    double total = 0.0;  // l_unsup + l_con
};

// Scales the two terms in the training objective; {1, 0} is the
// no-consistency ablation. Reported breakdowns stay unweighted.
struct LossWeights {
    double unsup = 1.0;
    double con = 1.0;
};

// sum over unordered pairs i<j of (p_i - p_j)^2
double consistency_term(const std::array<double, 3>& p) noexcept;

LossBreakdown loss(const ToyModel& model, const ConsistencyGroup& group);

// Adds d(w_u * l_unsup + w_c * l_con)/d(theta) into `grad` and returns the
// unweighted breakdown.
LossBreakdown accumulate_grad(const ToyModel& model, const ConsistencyGroup& group,
                              const LossWeights& weights, std::span<double> grad);

std::vector<double> grad_loss(const ToyModel& model, const ConsistencyGroup& group,
                              const LossWeights& weights = {});

// Linear warmup from `initial` to `peak`, then constant.
struct LrSchedule {
    double initial = 0.025 / 3.0;
    double peak = 0.025;
    long warmup_steps = 600;

    double at(long step) const noexcept;
};

struct TrainOptions {
    long steps = 2000;
    LrSchedule schedule;
    LossWeights weights;
};

struct TrainLogEntry {
    long step = 0;
    double lr = 0.0;
    LossBreakdown loss;  // mean over groups, before the update
};

struct TrainResult {
    ToyModel model;
    std::vector<TrainLogEntry> log;
};

// Full-batch gradient descent on the mean group loss. Throws TrainingFailure
// when the loss stops being finite.
TrainResult train(ToyModel model, const std::vector<ConsistencyGroup>& groups,
                  const TrainOptions& options);

std::string training_log_jsonl(const std::vector<TrainLogEntry>& log);

}  // namespace coke
