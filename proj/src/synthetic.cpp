#include "coke/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "coke/error.hpp"
#include "coke/io.hpp"

namespace coke {

namespace {

constexpr const char* kSyllables[] = {"ka", "vo", "ru", "mi", "tel", "zan", "dor", "pi", "lu",
                                      "sha", "ren", "go", "bex", "ti", "nor", "qua", "fen", "ol"};
constexpr std::size_t kNumSyllables = std::size(kSyllables);

std::vector<std::string> make_word(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, kNumSyllables - 1);
    std::uniform_int_distribution<int> len(2, 3);
    std::vector<std::string> parts;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) parts.emplace_back(kSyllables[pick(rng)]);
    parts[0][0] = static_cast<char>(parts[0][0] - 'a' + 'A');
    return parts;
}

std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (const auto& p : parts) s += p;
    return s;
}

// Syllable tokens of a generated word; re-splits deterministically.
std::vector<std::string> split_word(std::string_view word) {
    std::vector<std::string> parts;
    std::string lower(word);
    if (!lower.empty()) lower[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(lower[0])));
    std::size_t i = 0;
    while (i < lower.size()) {
        std::size_t best = 0;
        for (const char* s : kSyllables) {
            const std::size_t len = std::char_traits<char>::length(s);
            if (len > best && lower.compare(i, len, s) == 0) best = len;
        }
        if (best == 0) best = 1;
        parts.push_back(std::string(word.substr(i, best)));
        i += best;
    }
    return parts;
}

enum class PromptFamily { Direct, Prior, Posterior, IcIdk, Verb };

PromptFamily classify_prompt(std::string_view p) {
    if (p.find("Do you know the answer") != std::string_view::npos) return PromptFamily::Prior;
    if (p.find("Are you sure that the answer") != std::string_view::npos) return PromptFamily::Posterior;
    if (p.find("confidence") != std::string_view::npos) return PromptFamily::Verb;
    if (p.find("\nA:") != std::string_view::npos) return PromptFamily::IcIdk;
    return PromptFamily::Direct;
}

std::mt19937_64 rng_for(std::uint64_t seed, std::string_view id, PromptFamily family) {
    return std::mt19937_64(io::fnv1a(id, seed * 31 + static_cast<std::uint64_t>(family) + 1));
}

Completion word_completion(const std::vector<std::string>& pieces, double min_prob,
                           std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Completion c;
    std::uniform_int_distribution<std::size_t> which(0, pieces.size() - 1);
    const std::size_t weakest = which(rng);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        c.tokens.push_back(i == 0 ? " " + pieces[i] : pieces[i]);
        const double p = i == weakest ? min_prob : min_prob + (1.0 - min_prob) * u(rng);
        c.logprobs.push_back(std::log(p));
    }
    // Trailing newline and a runaway token exercise the stop rule.
    c.tokens.emplace_back("\n");
    c.logprobs.push_back(std::log(0.6 + 0.4 * u(rng)));
    c.tokens.emplace_back("Question");
    c.logprobs.push_back(std::log(0.3 + 0.4 * u(rng)));
    return c;
}

Completion phrase_completion(const std::string& phrase, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.5, 1.0);
    Completion c;
    c.tokens.push_back(" " + phrase);
    c.logprobs.push_back(std::log(u(rng)));
    c.tokens.emplace_back("</s>");
    c.logprobs.push_back(std::log(u(rng)));
    return c;
}

}  // namespace

SyntheticUniverse SyntheticUniverse::generate(const SyntheticSpec& spec) {
    if (spec.size == 0) throw InvalidInput("synthetic universe needs at least one question");
    if (!(spec.answerable_fraction >= 0.0 && spec.answerable_fraction <= 1.0))
        throw InvalidInput("answerable_fraction must lie in [0, 1]");
    if (!(0.0 < spec.low_lo && spec.low_lo <= spec.low_hi && spec.low_hi <= 1.0 &&
          0.0 < spec.high_lo && spec.high_lo <= spec.high_hi && spec.high_hi <= 1.0))
        throw InvalidInput("confidence bands must lie inside (0, 1]");

    SyntheticUniverse u;
    u.spec_ = spec;
    std::mt19937_64 rng(spec.seed);
    const auto answerable_count =
        static_cast<std::size_t>(std::llround(spec.answerable_fraction * static_cast<double>(spec.size)));
    std::vector<bool> answerable(spec.size, false);
    std::fill_n(answerable.begin(), answerable_count, true);
    for (std::size_t i = spec.size; i > 1; --i) {
        const std::size_t j = rng() % i;
        std::swap(answerable[i - 1], answerable[j]);
    }

    const int width = static_cast<int>(std::to_string(spec.size - 1).size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < spec.size; ++i) {
        SyntheticItem item;
        char num[32];
        std::snprintf(num, sizeof num, "%0*zu", width, i);
        item.id = spec.source + "-" + num;
        item.text = std::string("which code word is registered for synthetic entity #") + num;
        item.gold = join(make_word(rng));
        std::string wrong;
        do wrong = join(make_word(rng));
        while (wrong == item.gold);
        item.answerable = answerable[i];
        item.prediction = item.answerable ? item.gold : wrong;
        const double r = unit(rng);
        item.confidence = item.answerable
                              ? spec.high_hi - (spec.high_hi - spec.high_lo) * r * r
                              : spec.low_lo + (spec.low_hi - spec.low_lo) * r;
        u.items_.push_back(std::move(item));
    }
    return u;
}

nlohmann::json SyntheticUniverse::to_json() const {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : items_)
        items.push_back({{"id", it.id},
                         {"text", it.text},
                         {"gold", it.gold},
                         {"prediction", it.prediction},
                         {"answerable", it.answerable},
                         {"confidence", it.confidence}});
    return {{"spec",
             {{"size", spec_.size},
              {"answerable_fraction", spec_.answerable_fraction},
              {"high_band", {spec_.high_lo, spec_.high_hi}},
              {"low_band", {spec_.low_lo, spec_.low_hi}},
              {"seed", spec_.seed},
              {"source", spec_.source}}},
            {"items", items}};
}

SyntheticUniverse SyntheticUniverse::from_json(const nlohmann::json& j) {
    SyntheticUniverse u;
    try {
        const auto& s = j.at("spec");
        u.spec_.size = s.at("size").get<std::size_t>();
        u.spec_.answerable_fraction = s.at("answerable_fraction").get<double>();
        u.spec_.high_lo = s.at("high_band")[0].get<double>();
        u.spec_.high_hi = s.at("high_band")[1].get<double>();
        u.spec_.low_lo = s.at("low_band")[0].get<double>();
        u.spec_.low_hi = s.at("low_band")[1].get<double>();
        u.spec_.seed = s.at("seed").get<std::uint64_t>();
        u.spec_.source = s.at("source").get<std::string>();
        for (const auto& it : j.at("items")) {
            u.items_.push_back({it.at("id").get<std::string>(), it.at("text").get<std::string>(),
                                it.at("gold").get<std::string>(),
                                it.at("prediction").get<std::string>(),
                                it.at("answerable").get<bool>(), it.at("confidence").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed synthetic universe: ") + e.what());
    }
    return u;
}

SyntheticUniverse SyntheticUniverse::load(const std::string& path) {
    try {
        return from_json(nlohmann::json::parse(io::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path, e.what());
    }
}

void SyntheticUniverse::save(const std::string& path) const { io::write_file(path, to_json().dump(1) + "\n"); }

std::vector<QuestionRecord> SyntheticUniverse::questions(bool with_gold) const {
    std::vector<QuestionRecord> out;
    out.reserve(items_.size());
    for (const auto& it : items_) {
        QuestionRecord q{it.id, it.text, {}, spec_.source};
        if (with_gold) q.gold_answers = {it.gold};
        out.push_back(std::move(q));
    }
    return out;
}

const SyntheticItem* SyntheticUniverse::find_in_prompt(std::string_view prompt) const {
    const SyntheticItem* best = nullptr;
    std::size_t best_pos = 0;
    for (const auto& it : items_) {
        const auto pos = prompt.rfind(it.text);
        if (pos == std::string_view::npos) continue;
        if (!best || pos > best_pos || (pos == best_pos && it.text.size() > best->text.size())) {
            best = &it;
            best_pos = pos;
        }
    }
    return best;
}

SyntheticEndpoint::SyntheticEndpoint(const SyntheticUniverse& universe, std::string model_id)
    : universe_(universe), model_id_(std::move(model_id)) {}

Completion SyntheticEndpoint::complete(const CompletionRequest& request) {
    ++calls_;
    const SyntheticItem* item = universe_.find_in_prompt(request.prompt);
    const PromptFamily family = classify_prompt(request.prompt);
    const std::uint64_t seed = universe_.spec().seed;

    Completion c;
    if (!item) {
        std::mt19937_64 rng(io::fnv1a(request.prompt, seed));
        c = phrase_completion("Unknown", rng);
    } else {
        auto rng = rng_for(seed, item->id, family);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double conf = item->confidence;
        switch (family) {
            case PromptFamily::Direct:
                c = word_completion(split_word(item->prediction), conf, rng);
                break;
            case PromptFamily::Prior:
                // Untuned chat models claim to know almost everything.
                c = phrase_completion(unit(rng) < 0.86 + 0.1 * conf ? "Yes" : "No", rng);
                break;
            case PromptFamily::Posterior:
                c = phrase_completion(conf + 0.2 * noise(rng) > 0.45 ? "Sure" : "Unsure", rng);
                break;
            case PromptFamily::IcIdk:
                if (conf + 0.15 * noise(rng) < 0.3) c = phrase_completion("Unknow", rng);
                else c = word_completion(split_word(item->prediction), conf, rng);
                break;
            case PromptFamily::Verb: {
                if (unit(rng) < 0.03) {
                    c = phrase_completion("I cannot say.", rng);
                    break;
                }
                const double v = std::clamp(0.55 + 0.45 * conf + 0.15 * noise(rng), 0.0, 1.0);
                char buf[48];
                if (unit(rng) < 0.5) std::snprintf(buf, sizeof buf, "Confidence: %d%%", static_cast<int>(std::lround(v * 100)));
                else std::snprintf(buf, sizeof buf, "Confidence: %.2f", v);
                c = phrase_completion(buf, rng);
                break;
            }
        }
    }
    c.model_id = model_id_;
    return c;
}

}  // namespace coke
