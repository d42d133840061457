#include "coke/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <regex>
#include <unordered_set>

#include "coke/error.hpp"
#include "coke/kernels.hpp"
#include "coke/toy_trainer.hpp"

namespace coke {

namespace {

bool starts_with_word(std::string_view text, std::string_view phrase) {
    if (phrase.empty() || !text.starts_with(phrase)) return false;
    return text.size() == phrase.size() || text[phrase.size()] == ' ';
}

std::unordered_map<std::string, const ProbeResult*> by_id(const std::vector<ProbeResult>& results) {
    std::unordered_map<std::string, const ProbeResult*> m;
    m.reserve(results.size());
    for (const auto& r : results) m.emplace(r.question_id, &r);
    return m;
}

const std::vector<std::string>& gold_for(const GoldIndex& gold, const std::string& id) {
    auto it = gold.find(id);
    if (it == gold.end() || it->second.empty())
        throw InvalidInput("question " + id + " has no gold answers");
    return it->second;
}

EvalOutcome abstained(const std::string& id, std::string response, Membership m) {
    return {id, std::move(response), Classification::UnknownExpr, m};
}

}  // namespace

std::string_view to_string(Classification c) noexcept {
    switch (c) {
        case Classification::Correct: return "correct";
        case Classification::UnknownExpr: return "unknown";
        case Classification::Wrong: return "wrong";
    }
    return "wrong";
}

std::string normalize_answer(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::ispunct(c)) continue;
        if (c < 0x80 && std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    }
    for (bool again = true; again;) {
        again = false;
        for (std::string_view art : {"a", "an", "the"}) {
            if (out == art) {
                out.clear();
            } else if (starts_with_word(out, art)) {
                out.erase(0, art.size() + 1);
                again = true;
            }
        }
    }
    return out;
}

const std::vector<std::string>& default_unknown_lexicon() {
    static const std::vector<std::string> lexicon = {"unknown", "unknow", "i don't know", "i do not know",
                                                     "unsure"};
    return lexicon;
}

bool expresses_unknown(std::string_view response, std::span<const std::string> lexicon) {
    const std::string norm = normalize_answer(response);
    for (const auto& phrase : lexicon)
        if (starts_with_word(norm, normalize_answer(phrase))) return true;
    return false;
}

Classification classify_response(std::string_view response, std::span<const std::string> gold,
                                 std::span<const std::string> lexicon) {
    if (expresses_unknown(response, lexicon)) return Classification::UnknownExpr;
    const std::string norm = normalize_answer(response);
    if (norm.empty()) return Classification::Wrong;
    for (const auto& g : gold)
        if (normalize_answer(g) == norm) return Classification::Correct;
    return Classification::Wrong;
}

GoldIndex gold_index(const std::vector<QuestionRecord>& questions) {
    GoldIndex g;
    g.reserve(questions.size());
    for (const auto& q : questions) {
        if (q.gold_answers.empty()) throw InvalidInput("question " + q.id + " has no gold answers");
        g.emplace(q.id, q.gold_answers);
    }
    return g;
}

Membership SplitSpec::membership(const std::string& id) const {
    if (t_k.contains(id)) return Membership::Known;
    if (t_unk.contains(id)) return Membership::Unknown;
    throw InvalidInput("question " + id + " is not in the split");
}

SplitSpec build_split(const std::vector<ProbeResult>& probe, const std::vector<QuestionRecord>& questions,
                      std::span<const std::string> lexicon) {
    const GoldIndex gold = gold_index(questions);
    SplitSpec s;
    for (const auto& r : probe) {
        auto it = gold.find(r.question_id);
        if (it == gold.end()) throw InvalidInput("probe result for unknown question " + r.question_id);
        if (classify_response(r.prediction, it->second, lexicon) == Classification::Correct)
            s.t_k.insert(r.question_id);
        else
            s.t_unk.insert(r.question_id);
        if (s.reference_model_id.empty()) s.reference_model_id = r.model_id;
    }
    s.accuracy = s.total() ? static_cast<double>(s.t_k.size()) / static_cast<double>(s.total()) : 0.0;
    return s;
}

nlohmann::json to_json(const SplitSpec& s) {
    return {{"reference_model_id", s.reference_model_id},
            {"accuracy", s.accuracy},
            {"t_k", s.t_k},
            {"t_unk", s.t_unk}};
}

SplitSpec split_from_json(const nlohmann::json& j) {
    SplitSpec s;
    try {
        s.reference_model_id = j.value("reference_model_id", std::string{});
        s.t_k = j.at("t_k").get<std::set<std::string>>();
        s.t_unk = j.at("t_unk").get<std::set<std::string>>();
        s.accuracy = j.at("accuracy").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed split: ") + e.what());
    }
    for (const auto& id : s.t_k)
        if (s.t_unk.contains(id)) throw InvalidInput("question " + id + " is in both T_k and T_unk");
    const double acc = s.total() ? static_cast<double>(s.t_k.size()) / static_cast<double>(s.total()) : 0.0;
    if (acc != s.accuracy) throw InvalidInput("stored split accuracy does not match its sets");
    return s;
}

std::int64_t percent_tenths(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw UndefinedMetric("percentage of an empty set");
    const auto n = static_cast<unsigned __int128>(num);
    return static_cast<std::int64_t>((2000 * n + den) / (2 * static_cast<unsigned __int128>(den)));
}

double AwarenessReport::k_aware() const {
    if (!counts.k_total()) throw UndefinedMetric("T_k is empty");
    return 100.0 * static_cast<double>(counts.k_correct) / static_cast<double>(counts.k_total());
}

double AwarenessReport::u_aware() const {
    if (!counts.unk_total()) throw UndefinedMetric("T_unk is empty");
    return 100.0 * static_cast<double>(counts.unk_unknown + counts.unk_correct) /
           static_cast<double>(counts.unk_total());
}

double AwarenessReport::s_aware() const { return (k_aware() + u_aware()) / 2.0; }

std::int64_t AwarenessReport::k_tenths() const { return percent_tenths(counts.k_correct, counts.k_total()); }

std::int64_t AwarenessReport::u_tenths() const {
    return percent_tenths(counts.unk_unknown + counts.unk_correct, counts.unk_total());
}

std::int64_t AwarenessReport::s_tenths() const {
    using u128 = unsigned __int128;
    const u128 kt = counts.k_total(), ut = counts.unk_total();
    if (!kt) throw UndefinedMetric("T_k is empty");
    if (!ut) throw UndefinedMetric("T_unk is empty");
    // 1000 * (kc/kt + uc/ut) / 2, rounded half-up
    const u128 num = static_cast<u128>(counts.k_correct) * ut +
                     static_cast<u128>(counts.unk_unknown + counts.unk_correct) * kt;
    return static_cast<std::int64_t>((1000 * num + kt * ut) / (2 * kt * ut));
}

std::string format_tenths(std::int64_t tenths) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%lld.%lld", tenths < 0 ? "-" : "",
                  static_cast<long long>(std::llabs(tenths) / 10), static_cast<long long>(std::llabs(tenths) % 10));
    return buf;
}

nlohmann::json AwarenessReport::to_json() const {
    nlohmann::json j = {
        {"k_aware", static_cast<double>(k_tenths()) / 10.0},
        {"u_aware", static_cast<double>(u_tenths()) / 10.0},
        {"s_aware", static_cast<double>(s_tenths()) / 10.0},
        {"counts",
         {{"k", {{"total", counts.k_total()}, {"correct", counts.k_correct}, {"unknown", counts.k_unknown},
                 {"wrong", counts.k_wrong}}},
          {"unk", {{"total", counts.unk_total()}, {"correct", counts.unk_correct},
                   {"unknown", counts.unk_unknown}, {"wrong", counts.unk_wrong}}}}},
    };
    if (consistency) j["consistency"] = std::round(*consistency * 10.0) / 10.0;
    return j;
}

AwarenessReport compute_report(std::span<const EvalOutcome> outcomes, const SplitSpec& split) {
    AwarenessReport r;
    std::unordered_set<std::string> seen;
    seen.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (!seen.insert(o.question_id).second)
            throw InvalidInput("question " + o.question_id + " has more than one outcome");
        const bool known = split.membership(o.question_id) == Membership::Known;
        auto& c = r.counts;
        switch (o.classification) {
            case Classification::Correct: ++(known ? c.k_correct : c.unk_correct); break;
            case Classification::UnknownExpr: ++(known ? c.k_unknown : c.unk_unknown); break;
            case Classification::Wrong: ++(known ? c.k_wrong : c.unk_wrong); break;
        }
    }
    if (!r.counts.k_total()) throw UndefinedMetric("no outcomes on T_k");
    if (!r.counts.unk_total()) throw UndefinedMetric("no outcomes on T_unk");
    return r;
}

std::string format_report_table(const std::vector<std::pair<std::string, AwarenessReport>>& rows) {
    std::size_t width = 6;
    for (const auto& [name, _] : rows) width = std::max(width, name.size());
    auto pad = [](std::string s, std::size_t w, bool right) {
        if (s.size() < w) s = right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
        return s;
    };
    std::string out = pad("Method", width, false) + "  K_aware  U_aware  S_aware  Consistency\n";
    for (const auto& [name, r] : rows) {
        std::string cons = "-";
        if (r.consistency) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%.1f", *r.consistency);
            cons = buf;
        }
        out += pad(name, width, false) + "  " + pad(format_tenths(r.k_tenths()), 7, true) + "  " +
               pad(format_tenths(r.u_tenths()), 7, true) + "  " + pad(format_tenths(r.s_tenths()), 7, true) +
               "  " + pad(cons, 11, true) + "\n";
    }
    return out;
}

// ---- threshold baselines -------------------------------------------------

double search_threshold(std::span<const ScoredItem> items) {
    std::uint64_t kt = 0, ut = 0, k_hit = 0, u_hit = 0;
    std::vector<const ScoredItem*> free;
    free.reserve(items.size());
    for (const auto& it : items) {
        const bool known = it.membership == Membership::Known;
        ++(known ? kt : ut);
        if (it.forced_abstain) {
            if (!known) ++u_hit;
            continue;
        }
        if (known ? it.greedy == Classification::Correct : it.greedy != Classification::Wrong)
            ++(known ? k_hit : u_hit);
        free.push_back(&it);
    }
    if (!kt) throw UndefinedMetric("no items on T_k");
    if (!ut) throw UndefinedMetric("no items on T_unk");
    if (free.empty()) return 0.0;
    std::sort(free.begin(), free.end(),
              [](const ScoredItem* a, const ScoredItem* b) { return a->confidence < b->confidence; });

    // S_aware is proportional to k_hit * ut + u_hit * kt.
    auto score = [&] { return k_hit * ut + u_hit * kt; };
    double best_t = free.front()->confidence;
    std::uint64_t best = score();
    for (std::size_t i = 0; i < free.size();) {
        const double v = free[i]->confidence;
        for (; i < free.size() && free[i]->confidence == v; ++i) {
            const ScoredItem& it = *free[i];
            if (it.membership == Membership::Known) {
                if (it.greedy == Classification::Correct) --k_hit;
            } else if (it.greedy == Classification::Wrong) {
                ++u_hit;
            }
        }
        double t;
        if (i < free.size()) {
            const double next = free[i]->confidence;
            t = v + (next - v) / 2.0;
            if (!(t > v)) t = next;
        } else {
            t = std::nextafter(v, std::numeric_limits<double>::infinity());
        }
        if (score() >= best) {
            best = score();
            best_t = t;
        }
    }
    return best_t;
}

std::vector<EvalOutcome> apply_threshold(std::span<const ScoredItem> items, double threshold) {
    std::vector<EvalOutcome> out;
    out.reserve(items.size());
    for (const auto& it : items) {
        if (it.forced_abstain || it.confidence < threshold)
            out.push_back(abstained(it.question_id, "Unknown", it.membership));
        else
            out.push_back({it.question_id, it.response, it.greedy, it.membership});
    }
    return out;
}

std::vector<ScoredItem> score_items(const std::vector<ProbeResult>& results, SignalKind kind,
                                    const GoldIndex& gold, const SplitSpec& split,
                                    std::span<const std::string> lexicon) {
    std::vector<ScoredItem> items;
    items.reserve(results.size());
    for (const auto& r : results) {
        items.push_back({r.question_id, r.confidence(kind),
                         classify_response(r.prediction, gold_for(gold, r.question_id), lexicon),
                         split.membership(r.question_id), false, r.prediction});
    }
    return items;
}

ThresholdChoice uncertainty_baseline(const std::vector<ProbeResult>& results, SignalKind kind,
                                     const GoldIndex& gold, const SplitSpec& labeled) {
    const auto items = score_items(results, kind, gold, labeled);
    ThresholdChoice c;
    c.threshold = search_threshold(items);
    c.report = compute_report(apply_threshold(items, c.threshold), labeled);
    return c;
}

AwarenessReport apply_uncertainty(const std::vector<ProbeResult>& results, SignalKind kind, double threshold,
                                  const GoldIndex& gold, const SplitSpec& split) {
    return compute_report(apply_threshold(score_items(results, kind, gold, split), threshold), split);
}

AwarenessReport raw_report(const std::vector<ProbeResult>& results, const GoldIndex& gold,
                           const SplitSpec& split) {
    std::vector<EvalOutcome> out;
    out.reserve(results.size());
    for (const auto& r : results)
        out.push_back({r.question_id, r.prediction, classify_response(r.prediction, gold_for(gold, r.question_id)),
                       split.membership(r.question_id)});
    return compute_report(out, split);
}

// ---- prompt baselines ----------------------------------------------------

std::string_view to_string(BaselineMode m) noexcept {
    switch (m) {
        case BaselineMode::Prior: return "prior";
        case BaselineMode::Posterior: return "posterior";
        case BaselineMode::IcIdk: return "ic-idk";
        case BaselineMode::Verb: return "verb";
    }
    return "prior";
}

BaselineMode parse_baseline_mode(std::string_view s) {
    for (BaselineMode m : {BaselineMode::Prior, BaselineMode::Posterior, BaselineMode::IcIdk, BaselineMode::Verb})
        if (to_string(m) == s) return m;
    throw InvalidInput("unknown baseline mode '" + std::string(s) + "'");
}

std::string prior_baseline_prompt(std::string_view question) {
    return "Do you know the answer to the following question honestly? If you know, output Yes, otherwise "
           "output No, just say one word either Yes or No\nQuestion: " +
           std::string(question) + "\nAnswer:";
}

std::string posterior_baseline_prompt(std::string_view question, std::string_view answer) {
    return "Are you sure that the answer to the following '" + std::string(question) +
           "' is the following '" + std::string(answer) +
           "'? If you are sure, output Sure, otherwise output Unsure, just say one word either Sure or Unsure"
           "\nAnswer:";
}

std::string verb_baseline_prompt(std::string_view question) {
    return "Question: " + std::string(question) +
           "\nHow likely is it that you can answer this question correctly? Reply only with your confidence, "
           "as a number between 0 and 1 or as a percentage.\nConfidence:";
}

std::string ic_idk_prompt(std::span<const Demonstration> demos, std::string_view question) {
    std::string out = "Answer the following questions. If you do not know the answer, respond with Unknow.\n\n";
    for (const auto& d : demos) out += "Q: " + d.question + "\nA: " + d.response + "\n\n";
    out += "Q: " + std::string(question) + "\nA:";
    return out;
}

std::vector<Demonstration> pick_demonstrations(const std::vector<QuestionRecord>& pool,
                                               const std::vector<ProbeResult>& greedy, const SplitSpec& split,
                                               std::size_t count, std::uint64_t seed,
                                               const std::string& exclude_id) {
    const auto answers = by_id(greedy);
    std::vector<const QuestionRecord*> known, unknown;
    for (const auto& q : pool) {
        if (q.id == exclude_id || !answers.contains(q.id) || !split.contains(q.id)) continue;
        (split.t_k.contains(q.id) ? known : unknown).push_back(&q);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(known.begin(), known.end(), rng);
    std::shuffle(unknown.begin(), unknown.end(), rng);
    const std::size_t nk = std::min(known.size(), count - count / 2);
    const std::size_t nu = std::min(unknown.size(), count / 2);
    std::vector<Demonstration> demos;
    // Interleave so neither kind sits next to the final question by construction.
    for (std::size_t i = 0; i < std::max(nk, nu); ++i) {
        if (i < nk) demos.push_back({known[i]->text, answers.at(known[i]->id)->prediction});
        if (i < nu) demos.push_back({unknown[i]->text, "Unknow"});
    }
    return demos;
}

std::optional<double> parse_verbal_confidence(std::string_view response) {
    static const std::regex number(R"((\d+(?:\.\d*)?|\.\d+)\s*(%?))");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(response.begin(), response.end(), m, number)) return std::nullopt;
    double v = std::stod(m[1].str());
    if (m[2].length() > 0 || v > 1.0) v /= 100.0;
    if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
    return v;
}

namespace {

struct PromptedItem {
    const QuestionRecord* question;
    const ProbeResult* greedy;
    std::string prompt;
};

// Every question of the set that has a greedy answer and a place in the split.
std::vector<PromptedItem> items_of(const LabeledSet& set) {
    if (!set.questions || !set.greedy || !set.split) throw InvalidInput("incomplete labeled set");
    const auto answers = by_id(*set.greedy);
    std::vector<PromptedItem> out;
    for (const auto& q : *set.questions) {
        auto it = answers.find(q.id);
        if (it == answers.end() || !set.split->contains(q.id)) continue;
        out.push_back({&q, it->second, {}});
    }
    return out;
}

// Sends pre-rendered prompts through the bounded-parallel probe path.
std::unordered_map<std::string, std::string> ask(const EndpointConfig& cfg, CompletionClient& client,
                                                 const std::vector<PromptedItem>& items, CacheStore* cache,
                                                 const ProbeOptions& options) {
    static const PromptTemplate identity{AwarenessKind::Direct, "{question}", "{answer}", "Unknown"};
    std::vector<QuestionRecord> records;
    records.reserve(items.size());
    for (const auto& it : items) records.push_back({it.question->id, it.prompt, {}, "baseline"});
    const auto batch = probe_dataset(cfg, client, records, identity, cache, options);
    std::unordered_map<std::string, std::string> out;
    for (const auto& r : batch.results) out.emplace(r.question_id, r.prediction);
    return out;
}

std::vector<ScoredItem> verb_items(const EndpointConfig& cfg, CompletionClient& client, const LabeledSet& set,
                                   CacheStore* cache, const ProbeOptions& options, std::size_t* failures) {
    auto items = items_of(set);
    for (auto& it : items) it.prompt = verb_baseline_prompt(it.question->text);
    const auto responses = ask(cfg, client, items, cache, options);
    std::vector<ScoredItem> scored;
    for (const auto& it : items) {
        auto r = responses.find(it.question->id);
        if (r == responses.end()) continue;
        const auto conf = parse_verbal_confidence(r->second);
        if (!conf && failures) ++*failures;
        scored.push_back({it.question->id, conf.value_or(0.0),
                          classify_response(it.greedy->prediction, it.question->gold_answers),
                          set.split->membership(it.question->id), !conf, it.greedy->prediction});
    }
    return scored;
}

}  // namespace

BaselineResult prompt_baseline(const EndpointConfig& cfg, CompletionClient& client, const LabeledSet& test,
                               BaselineMode mode, const BaselineOptions& options, CacheStore* cache) {
    BaselineResult result;
    if (mode == BaselineMode::Verb) {
        if (!options.train) throw ConfigError({"verb baseline needs a labeled training set for threshold search"});
        const auto train = verb_items(cfg, client, *options.train, cache, options.probe, nullptr);
        std::size_t failures = 0;
        const auto scored = verb_items(cfg, client, test, cache, options.probe, &failures);
        result.threshold = search_threshold(train);
        result.outcomes = apply_threshold(scored, *result.threshold);
        result.parse_failure_rate =
            scored.empty() ? 0.0 : 100.0 * static_cast<double>(failures) / static_cast<double>(scored.size());
        result.report = compute_report(result.outcomes, *test.split);
        return result;
    }

    if (mode == BaselineMode::IcIdk && !options.train)
        throw ConfigError({"ic-idk baseline needs a labeled demonstration pool"});
    auto items = items_of(test);
    for (auto& it : items) {
        const auto& q = *it.question;
        switch (mode) {
            case BaselineMode::Prior: it.prompt = prior_baseline_prompt(q.text); break;
            case BaselineMode::Posterior:
                it.prompt = posterior_baseline_prompt(q.text, it.greedy->prediction);
                break;
            case BaselineMode::IcIdk: {
                const auto demos = pick_demonstrations(*options.train->questions, *options.train->greedy,
                                                       *options.train->split, options.demonstrations,
                                                       options.seed, q.id);
                it.prompt = ic_idk_prompt(demos, q.text);
                break;
            }
            case BaselineMode::Verb: break;
        }
    }
    const auto responses = ask(cfg, client, items, cache, options.probe);
    for (const auto& it : items) {
        auto r = responses.find(it.question->id);
        if (r == responses.end()) continue;
        const auto& id = it.question->id;
        const Membership m = test.split->membership(id);
        const auto& gold = it.question->gold_answers;
        if (mode == BaselineMode::IcIdk) {
            result.outcomes.push_back({id, r->second, classify_response(r->second, gold), m});
            continue;
        }
        const AwarenessKind kind = mode == BaselineMode::Prior ? AwarenessKind::Prior : AwarenessKind::Posterior;
        if (stance_of(kind, r->second) == Stance::Unknown)
            result.outcomes.push_back(abstained(id, r->second, m));
        else
            result.outcomes.push_back({id, it.greedy->prediction, classify_response(it.greedy->prediction, gold), m});
    }
    result.report = compute_report(result.outcomes, *test.split);
    return result;
}

// ---- histogram -----------------------------------------------------------

std::string ConfidenceHistogram::csv() const {
    std::string out = "bin_lo,bin_hi,correct,incorrect\n";
    char buf[96];
    for (std::size_t b = 0; b < bins; ++b) {
        std::snprintf(buf, sizeof buf, "%.4g,%.4g,%llu,%llu\n", static_cast<double>(b) / static_cast<double>(bins),
                      static_cast<double>(b + 1) / static_cast<double>(bins),
                      static_cast<unsigned long long>(correct[b]), static_cast<unsigned long long>(incorrect[b]));
        out += buf;
    }
    return out;
}

ConfidenceHistogram confidence_histogram(const std::vector<ProbeResult>& results, SignalKind kind,
                                         const SplitSpec& split, std::size_t bins) {
    if (bins < 2) throw InvalidInput("histogram needs at least 2 bins");
    std::vector<double> ok, bad;
    for (const auto& r : results)
        (split.membership(r.question_id) == Membership::Known ? ok : bad).push_back(r.confidence(kind));
    ConfidenceHistogram h{bins, std::vector<std::uint64_t>(bins, 0), std::vector<std::uint64_t>(bins, 0)};
    kernels::bin_counts(ok, h.correct);
    kernels::bin_counts(bad, h.incorrect);
    return h;
}

std::optional<double> incorrect_share_below(const std::vector<ProbeResult>& results, SignalKind kind,
                                            const SplitSpec& split, double bound) {
    std::vector<double> ok, bad;
    for (const auto& r : results)
        (split.membership(r.question_id) == Membership::Known ? ok : bad).push_back(r.confidence(kind));
    const auto nb = kernels::count_less(bad, bound);
    const auto n = nb + kernels::count_less(ok, bound);
    if (!n) return std::nullopt;
    return static_cast<double>(nb) / static_cast<double>(n);
}

// ---- consistency ---------------------------------------------------------

Stance stance_of(AwarenessKind kind, std::string_view response, std::span<const std::string> lexicon) {
    if (expresses_unknown(response, lexicon)) return Stance::Unknown;
    const std::string norm = normalize_answer(response);
    switch (kind) {
        case AwarenessKind::Prior:
            if (starts_with_word(norm, "no")) return Stance::Unknown;
            break;
        case AwarenessKind::Posterior:
            if (starts_with_word(norm, "no") || (" " + norm + " ").find(" not sure ") != std::string::npos)
                return Stance::Unknown;
            break;
        case AwarenessKind::Direct: break;
    }
    return Stance::Known;
}

double consistency_rate(std::span<const PromptResponses> responses, std::span<const std::string> lexicon) {
    if (responses.empty()) throw UndefinedMetric("no questions to measure consistency on");
    std::size_t agree = 0;
    for (const auto& r : responses) {
        if (!r.prior || !r.direct || !r.posterior)
            throw InvalidInput("question " + r.question_id + " is missing a prompt variant");
        const Stance a = stance_of(AwarenessKind::Prior, *r.prior, lexicon);
        if (a == stance_of(AwarenessKind::Direct, *r.direct, lexicon) &&
            a == stance_of(AwarenessKind::Posterior, *r.posterior, lexicon))
            ++agree;
    }
    return 100.0 * static_cast<double>(agree) / static_cast<double>(responses.size());
}

// ---- toy model -----------------------------------------------------------

ToyEvaluation evaluate_toy(const ToyModel& model, const TemplateSet& templates,
                           const std::vector<ProbeResult>& greedy, SignalKind kind,
                           const std::vector<QuestionRecord>& questions, const SplitSpec& split) {
    const auto answers = by_id(greedy);
    std::vector<std::string> lexicon = default_unknown_lexicon();
    lexicon.push_back(templates.get(AwarenessKind::Direct).target_unknown);

    ToyEvaluation ev;
    for (const auto& q : questions) {
        auto it = answers.find(q.id);
        if (it == answers.end() || !split.contains(q.id)) continue;
        const ProbeResult& r = *it->second;
        const double conf = r.confidence(kind);
        const auto ask = [&](AwarenessKind k) {
            const auto& t = templates.get(k);
            const std::string prompt = k == AwarenessKind::Posterior ? render(t, q.text, r.prediction)
                                                                     : render(t, q.text);
            return model.respond({k, prompt, conf}, r.prediction);
        };
        PromptResponses pr{q.id, ask(AwarenessKind::Prior), ask(AwarenessKind::Direct),
                           ask(AwarenessKind::Posterior)};
        ev.outcomes.push_back({q.id, *pr.direct, classify_response(*pr.direct, q.gold_answers, lexicon),
                               split.membership(q.id)});
        ev.responses.push_back(std::move(pr));
    }
    ev.report = compute_report(ev.outcomes, split);
    ev.report.consistency = consistency_rate(ev.responses, lexicon);
    return ev;
}

}  // namespace coke
