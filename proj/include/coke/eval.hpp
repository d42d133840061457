#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "coke/probe.hpp"
#include "coke/prompts.hpp"
#include "coke/signals.hpp"

namespace coke {

class CacheStore;
class ToyModel;

enum class Classification { Correct, UnknownExpr, Wrong };

std::string_view to_string(Classification c) noexcept;  // "correct", "unknown", "wrong"

// Lowercase, strip punctuation, collapse whitespace, drop leading a/an/the.
std::string normalize_answer(std::string_view text);

const std::vector<std::string>& default_unknown_lexicon();

// A lexicon phrase matches when the normalized response starts with it at a
// word boundary.
bool expresses_unknown(std::string_view response, std::span<const std::string> lexicon);

Classification classify_response(std::string_view response, std::span<const std::string> gold,
                                 std::span<const std::string> lexicon = default_unknown_lexicon());

using GoldIndex = std::unordered_map<std::string, std::vector<std::string>>;

// Throws InvalidInput when a question carries no gold answers.
GoldIndex gold_index(const std::vector<QuestionRecord>& questions);

struct SplitSpec {
    std::set<std::string> t_k;
    std::set<std::string> t_unk;
    std::string reference_model_id;
    double accuracy = 0.0;  // |t_k| / total

    std::size_t total() const noexcept { return t_k.size() + t_unk.size(); }
    bool contains(const std::string& id) const { return t_k.contains(id) || t_unk.contains(id); }
    Membership membership(const std::string& id) const;  // throws InvalidInput if absent
};

// Splits the probed questions by whether the greedy answer is Correct.
SplitSpec build_split(const std::vector<ProbeResult>& probe, const std::vector<QuestionRecord>& questions,
                      std::span<const std::string> lexicon = default_unknown_lexicon());

nlohmann::json to_json(const SplitSpec& s);
SplitSpec split_from_json(const nlohmann::json& j);

struct EvalOutcome {
    std::string question_id;
    std::string response;
    Classification classification = Classification::Wrong;
    Membership membership = Membership::Known;
};

struct CellCounts {
    std::uint64_t k_correct = 0, k_unknown = 0, k_wrong = 0;
    std::uint64_t unk_correct = 0, unk_unknown = 0, unk_wrong = 0;

    std::uint64_t k_total() const noexcept { return k_correct + k_unknown + k_wrong; }
    std::uint64_t unk_total() const noexcept { return unk_correct + unk_unknown + unk_wrong; }

    friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

// Rounds 100 * num / den to one decimal, half-up, in exact integer arithmetic.
// Returns tenths of a percent.
std::int64_t percent_tenths(std::uint64_t num, std::uint64_t den);

struct AwarenessReport {
    CellCounts counts;
    std::optional<double> consistency;  // percent, when three prompts were evaluated

    double k_aware() const;  // %Correct on T_k
    double u_aware() const;  // %(UnknownExpr or Correct) on T_unk
    double s_aware() const;  // (k_aware + u_aware) / 2

    // Half-up to one decimal, exact. In tenths of a percent.
    std::int64_t k_tenths() const;
    std::int64_t u_tenths() const;
    std::int64_t s_tenths() const;

    nlohmann::json to_json() const;
};

// Throws UndefinedMetric when T_k or T_unk is empty and InvalidInput when an
// outcome is outside the split or repeated.
AwarenessReport compute_report(std::span<const EvalOutcome> outcomes, const SplitSpec& split);

// One decimal, e.g. "74.0".
std::string format_tenths(std::int64_t tenths);

// Aligned text table with Table 1's K_aware / U_aware / S_aware columns.
std::string format_report_table(const std::vector<std::pair<std::string, AwarenessReport>>& rows);

// ---- threshold baselines -------------------------------------------------

struct ScoredItem {
    std::string question_id;
    double confidence = 0.0;
    Classification greedy = Classification::Wrong;  // classification of the unabstained answer
    Membership membership = Membership::Known;
    bool forced_abstain = false;  // e.g. an unparseable verbalized confidence
    std::string response;         // the greedy answer text
};

// Candidate thresholds: the smallest observed confidence (abstain on nothing),
// midpoints between consecutive distinct values, and the next double above the
// largest value (abstain on everything). Returns the candidate maximizing
// S_aware, ties broken toward the higher threshold.
double search_threshold(std::span<const ScoredItem> items);

// confidence < threshold (or forced) becomes an expression of unknown.
std::vector<EvalOutcome> apply_threshold(std::span<const ScoredItem> items, double threshold);

std::vector<ScoredItem> score_items(const std::vector<ProbeResult>& results, SignalKind kind,
                                    const GoldIndex& gold, const SplitSpec& split,
                                    std::span<const std::string> lexicon = default_unknown_lexicon());

struct ThresholdChoice {
    double threshold = 0.0;
    AwarenessReport report;
};

// Searches on the labeled set and reports on it.
ThresholdChoice uncertainty_baseline(const std::vector<ProbeResult>& results, SignalKind kind,
                                     const GoldIndex& gold, const SplitSpec& labeled);

// Applies a threshold found elsewhere.
AwarenessReport apply_uncertainty(const std::vector<ProbeResult>& results, SignalKind kind,
                                  double threshold, const GoldIndex& gold, const SplitSpec& split);

// Raw model: every greedy answer scored as-is.
AwarenessReport raw_report(const std::vector<ProbeResult>& results, const GoldIndex& gold,
                           const SplitSpec& split);

// ---- prompt baselines ----------------------------------------------------

enum class BaselineMode { Prior, Posterior, IcIdk, Verb };

std::string_view to_string(BaselineMode m) noexcept;  // "prior", "posterior", "ic-idk", "verb"
BaselineMode parse_baseline_mode(std::string_view s);

std::string prior_baseline_prompt(std::string_view question);
std::string posterior_baseline_prompt(std::string_view question, std::string_view answer);
std::string verb_baseline_prompt(std::string_view question);

struct Demonstration {
    std::string question;
    std::string response;  // the model's answer, or "Unknow" for a question it got wrong
};

std::string ic_idk_prompt(std::span<const Demonstration> demos, std::string_view question);

// Balanced demonstrations: half from T_k with their greedy answers, half from
// T_unk answered "Unknow". Deterministic in the seed; never uses `exclude_id`.
std::vector<Demonstration> pick_demonstrations(const std::vector<QuestionRecord>& pool,
                                               const std::vector<ProbeResult>& greedy,
                                               const SplitSpec& split, std::size_t count,
                                               std::uint64_t seed, const std::string& exclude_id = {});

// 0-1 or percent; a '%' sign or a value above 1 means percent. nullopt when
// no number can be read.
std::optional<double> parse_verbal_confidence(std::string_view response);

// The data one labeled question set contributes to a baseline run.
struct LabeledSet {
    const std::vector<QuestionRecord>* questions = nullptr;
    const std::vector<ProbeResult>* greedy = nullptr;  // reference probe results
    const SplitSpec* split = nullptr;
};

struct BaselineOptions {
    std::size_t demonstrations = 8;  // ic-idk
    std::uint64_t seed = 0;
    const LabeledSet* train = nullptr;  // demonstration pool (ic-idk) or threshold search set (verb)
    ProbeOptions probe;
};

struct BaselineResult {
    AwarenessReport report;
    std::vector<EvalOutcome> outcomes;
    std::optional<double> threshold;        // verb
    std::optional<double> parse_failure_rate;  // verb, percent of test responses
};

BaselineResult prompt_baseline(const EndpointConfig& cfg, CompletionClient& client, const LabeledSet& test,
                               BaselineMode mode, const BaselineOptions& options = {},
                               CacheStore* cache = nullptr);

// ---- histogram -----------------------------------------------------------

struct ConfidenceHistogram {
    std::size_t bins = 10;
    std::vector<std::uint64_t> correct;
    std::vector<std::uint64_t> incorrect;

    std::string csv() const;  // bin_lo,bin_hi,correct,incorrect
};

// Correct class = the question is in T_k.
ConfidenceHistogram confidence_histogram(const std::vector<ProbeResult>& results, SignalKind kind,
                                         const SplitSpec& split, std::size_t bins);

// Share of incorrect predictions among those with confidence below `bound`;
// nullopt when there are none.
std::optional<double> incorrect_share_below(const std::vector<ProbeResult>& results, SignalKind kind,
                                            const SplitSpec& split, double bound);

// ---- consistency ---------------------------------------------------------

struct PromptResponses {
    std::string question_id;
    std::optional<std::string> prior;
    std::optional<std::string> direct;
    std::optional<std::string> posterior;
};

enum class Stance { Known, Unknown };

Stance stance_of(AwarenessKind kind, std::string_view response,
                 std::span<const std::string> lexicon = default_unknown_lexicon());

// Percent of questions whose three responses take the same stance. Throws
// InvalidInput when a variant is missing.
double consistency_rate(std::span<const PromptResponses> responses,
                        std::span<const std::string> lexicon = default_unknown_lexicon());

// ---- toy model -----------------------------------------------------------

struct ToyEvaluation {
    AwarenessReport report;  // includes consistency
    std::vector<EvalOutcome> outcomes;
    std::vector<PromptResponses> responses;
};

// Asks the toy model all three prompts for every question in the split. The
// Direct prompt commits to the reference model's greedy answer.
ToyEvaluation evaluate_toy(const ToyModel& model, const TemplateSet& templates,
                           const std::vector<ProbeResult>& greedy, SignalKind kind,
                           const std::vector<QuestionRecord>& questions, const SplitSpec& split);

}  // namespace coke
