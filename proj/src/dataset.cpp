#include "coke/dataset.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "coke/error.hpp"
#include "coke/io.hpp"

namespace coke {

namespace {

template <typename T>
void shuffle_with(std::vector<T>& v, std::mt19937_64& rng) {
    // Spelled out so the order does not depend on the standard library.
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

nlohmann::json example_json(const TrainingExample& e) {
    return {{"awareness_kind", to_string(e.kind)},
            {"prompt", e.prompt},
            {"target", e.target},
            {"confidence", e.confidence.value},
            {"signal_kind", to_string(e.confidence.kind)}};
}

}  // namespace

void ConsistencyGroup::validate() const {
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        if (e.kind != kAllAwarenessKinds[i])
            throw InvalidInput("group " + group_id + " holds a " + std::string(to_string(e.kind)) +
                               " example in the " + std::string(to_string(kAllAwarenessKinds[i])) + " slot");
        if (e.prompt.empty() || e.target.empty())
            throw InvalidInput("group " + group_id + " has an empty prompt or target");
        if (e.membership != membership)
            throw InvalidInput("group " + group_id + " mixes known and unknown targets");
        if (e.group_id != group_id)
            throw InvalidInput("example group id " + e.group_id + " differs from " + group_id);
    }
}

std::vector<ConsistencyGroup> build_dataset(const PartitionedSet& parts,
                                            std::span<const PromptTemplate> templates,
                                            const std::unordered_map<std::string, std::string>& question_text,
                                            const DatasetOptions& options) {
    std::array<const PromptTemplate*, 3> by_kind{};
    for (const auto& t : templates) by_kind[static_cast<int>(t.kind)] = &t;
    std::vector<std::string> missing;
    for (AwarenessKind k : kAllAwarenessKinds)
        if (!by_kind[static_cast<int>(k)]) missing.push_back("missing " + std::string(to_string(k)) + " template");
    if (!missing.empty()) throw ConfigError(std::move(missing));
    for (const auto* t : by_kind) t->validate();
    if (parts.d_k.empty() && parts.d_unk.empty()) throw InvalidInput("partition is empty");

    std::mt19937_64 rng(options.seed);
    std::vector<PartitionEntry> known = parts.d_k;
    std::vector<PartitionEntry> unknown = parts.d_unk;
    if (options.balance) {
        const std::size_t n = std::min(known.size(), unknown.size());
        shuffle_with(known, rng);
        shuffle_with(unknown, rng);
        known.resize(n);
        unknown.resize(n);
        auto by_id = [](const PartitionEntry& a, const PartitionEntry& b) { return a.question_id < b.question_id; };
        std::sort(known.begin(), known.end(), by_id);
        std::sort(unknown.begin(), unknown.end(), by_id);
    }

    std::vector<ConsistencyGroup> groups;
    groups.reserve(known.size() + unknown.size());
    std::unordered_set<std::string> seen;
    auto add = [&](const PartitionEntry& e, Membership m) {
        if (!seen.insert(e.question_id).second)
            throw InvalidInput("question " + e.question_id + " appears in more than one group");
        auto it = question_text.find(e.question_id);
        if (it == question_text.end())
            throw InvalidInput("no question text for " + e.question_id);
        ConsistencyGroup g;
        g.group_id = "g-" + e.question_id;
        g.question_id = e.question_id;
        g.membership = m;
        for (AwarenessKind k : kAllAwarenessKinds) {
            const PromptTemplate& t = *by_kind[static_cast<int>(k)];
            auto& ex = g.examples[static_cast<int>(k)];
            ex.group_id = g.group_id;
            ex.kind = k;
            ex.prompt = k == AwarenessKind::Posterior ? render(t, it->second, e.prediction)
                                                      : render(t, it->second);
            ex.target = target_for(t, m, e.prediction);
            ex.membership = m;
            ex.confidence = {e.confidence, parts.thresholds.signal_kind};
        }
        g.validate();
        groups.push_back(std::move(g));
    };
    for (const auto& e : known) add(e, Membership::Known);
    for (const auto& e : unknown) add(e, Membership::Unknown);
    shuffle_with(groups, rng);
    return groups;
}

std::vector<ConsistencyGroup> build_dataset(const PartitionedSet& parts, const TemplateSet& templates,
                                            const std::unordered_map<std::string, std::string>& question_text,
                                            const DatasetOptions& options) {
    const std::array<PromptTemplate, 3> all = {templates.get(AwarenessKind::Prior),
                                               templates.get(AwarenessKind::Direct),
                                               templates.get(AwarenessKind::Posterior)};
    return build_dataset(parts, all, question_text, options);
}

ExportFormat parse_export_format(std::string_view s) {
    if (s == "internal") return ExportFormat::Internal;
    if (s == "sft-flat") return ExportFormat::SftFlat;
    throw InvalidInput("unknown export format '" + std::string(s) + "' (expected internal or sft-flat)");
}

nlohmann::json to_json(const ConsistencyGroup& g) {
    nlohmann::json ex = nlohmann::json::array();
    for (const auto& e : g.examples) ex.push_back(example_json(e));
    return {{"group_id", g.group_id},
            {"question_id", g.question_id},
            {"membership", to_string(g.membership)},
            {"examples", ex}};
}

ConsistencyGroup group_from_json(const nlohmann::json& j) {
    ConsistencyGroup g;
    try {
        g.group_id = j.at("group_id").get<std::string>();
        g.question_id = j.at("question_id").get<std::string>();
        g.membership = parse_membership(j.at("membership").get<std::string>());
        const auto& ex = j.at("examples");
        if (ex.size() != 3) throw InvalidInput("group " + g.group_id + " must hold exactly three examples");
        std::array<bool, 3> filled{};
        for (const auto& e : ex) {
            const AwarenessKind k = parse_awareness_kind(e.at("awareness_kind").get<std::string>());
            auto& slot = g.examples[static_cast<int>(k)];
            if (filled[static_cast<int>(k)])
                throw InvalidInput("group " + g.group_id + " repeats the " + std::string(to_string(k)) + " example");
            filled[static_cast<int>(k)] = true;
            slot.group_id = g.group_id;
            slot.kind = k;
            slot.prompt = e.at("prompt").get<std::string>();
            slot.target = e.at("target").get<std::string>();
            slot.membership = g.membership;
            slot.confidence = {e.at("confidence").get<double>(),
                               parse_signal_kind(e.value("signal_kind", std::string("min-prob")))};
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed group record: ") + e.what());
    }
    g.validate();
    return g;
}

std::string export_text(const std::vector<ConsistencyGroup>& groups, ExportFormat format) {
    std::string out;
    for (const auto& g : groups) {
        g.validate();
        if (format == ExportFormat::Internal) {
            out += to_json(g).dump();
            out += '\n';
            continue;
        }
        for (const auto& e : g.examples) {
            nlohmann::json line = {{"prompt", e.prompt},
                                   {"target", e.target},
                                   {"group_id", g.group_id},
                                   {"question_id", g.question_id},
                                   {"awareness_kind", to_string(e.kind)},
                                   {"membership", to_string(g.membership)},
                                   {"confidence", e.confidence.value}};
            out += line.dump();
            out += '\n';
        }
    }
    return out;
}

void export_dataset(const std::vector<ConsistencyGroup>& groups, ExportFormat format, const std::string& path) {
    io::write_file(path, export_text(groups, format));
}

std::vector<ConsistencyGroup> load_internal(const std::string& path) {
    std::vector<ConsistencyGroup> out;
    std::unordered_set<std::string> seen;
    for (const auto& j : io::read_jsonl(path)) {
        out.push_back(group_from_json(j));
        if (!seen.insert(out.back().question_id).second)
            throw InvalidInput(path + ": question " + out.back().question_id + " appears in more than one group");
    }
    return out;
}

nlohmann::json recommended_trainer_settings() {
    return {
        {"adapter", "lora"},
        {"summary", "r=8, alpha=16, dropout=0.05"},
        {"target_modules", "attention projections only; MLP weights frozen"},
        {"r", 8},
        {"alpha", 16},
        {"dropout", 0.05},
        {"learning_rate_initial", 1e-4},
        {"learning_rate_final", 3e-4},
        {"warmup_steps", 300},
        {"train_steps", 700},
        {"loss", "L = L_unsup + L_con"},
        {"l_unsup", "negative log-likelihood of each constructed target"},
        {"l_con", "sum over unordered example pairs i<j of (P(y_i|x_i) - P(y_j|x_j))^2"},
        {"sequence_probability", "product of target-token probabilities"},
        {"loss_masking", "not enforced; external trainers decide whether prompt tokens are masked"},
    };
}

nlohmann::json dataset_manifest(const std::vector<ConsistencyGroup>& groups, const DatasetOptions& options,
                                const std::vector<SourceFile>& sources,
                                const std::vector<SourceFile>& outputs) {
    std::size_t known = 0;
    for (const auto& g : groups) known += g.membership == Membership::Known;
    auto files = [](const std::vector<SourceFile>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& s : v) a.push_back({{"path", s.path}, {"checksum", s.checksum}});
        return a;
    };
    return {{"groups", groups.size()},
            {"examples", groups.size() * 3},
            {"known_groups", known},
            {"unknown_groups", groups.size() - known},
            {"seed", options.seed},
            {"balance", options.balance},
            {"ordering", "seeded shuffle; known and unknown groups interleaved"},
            {"sources", files(sources)},
            {"outputs", files(outputs)},
            {"recommended_trainer", recommended_trainer_settings()}};
}

}  // namespace coke
