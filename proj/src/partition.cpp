#include "coke/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "coke/error.hpp"
#include "coke/io.hpp"
#include "coke/kernels.hpp"

namespace coke {

namespace {

bool by_id(const PartitionEntry& a, const PartitionEntry& b) { return a.question_id < b.question_id; }

std::string_view to_string(ThresholdMode m) {
    return m == ThresholdMode::Absolute ? "absolute" : "quantile-derived";
}

ThresholdMode parse_mode(std::string_view s) {
    if (s == "absolute") return ThresholdMode::Absolute;
    if (s == "quantile-derived") return ThresholdMode::QuantileDerived;
    throw InvalidInput("unknown threshold mode '" + std::string(s) + "'");
}

nlohmann::json entry_json(std::string_view set, const PartitionEntry& e) {
    return {{"set", set}, {"question_id", e.question_id}, {"prediction", e.prediction},
            {"confidence", e.confidence}};
}

}  // namespace

void ThresholdSpec::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (mode == ThresholdMode::Absolute) {
        if (!in_unit(delta_unk) || !in_unit(delta_k))
            throw InvalidInput("thresholds must lie in [0, 1]");
        if (delta_unk > delta_k)
            throw InvalidInput("delta_unk must not exceed delta_k");
    }
    if (!(unk_quantile > 0.0 && unk_quantile < 1.0) || !(k_quantile > 0.0 && k_quantile < 1.0))
        throw InvalidInput("quantiles must lie in (0, 1)");
    if (unk_quantile + k_quantile > 1.0)
        throw InvalidInput("unk_quantile + k_quantile must not exceed 1");
}

nlohmann::json to_json(const ThresholdSpec& s) {
    return {{"delta_unk", s.delta_unk},       {"delta_k", s.delta_k},
            {"mode", to_string(s.mode)},      {"unk_quantile", s.unk_quantile},
            {"k_quantile", s.k_quantile},     {"signal_kind", to_string(s.signal_kind)}};
}

ThresholdSpec threshold_spec_from_json(const nlohmann::json& j) {
    ThresholdSpec s;
    try {
        s.delta_unk = j.value("delta_unk", 0.0);
        s.delta_k = j.value("delta_k", 0.0);
        s.mode = parse_mode(j.value("mode", std::string("quantile-derived")));
        s.unk_quantile = j.value("unk_quantile", 0.10);
        s.k_quantile = j.value("k_quantile", 0.20);
        s.signal_kind = parse_signal_kind(j.value("signal_kind", std::string("min-prob")));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed threshold spec: ") + e.what());
    }
    s.validate();
    return s;
}

double nearest_rank(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
    const double n = static_cast<double>(sorted.size());
    // The slack absorbs representation error in q (1 - 0.2 is not 0.8).
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

ThresholdSpec resolve_thresholds(std::span<const double> confidences, const ThresholdSpec& spec) {
    if (confidences.empty()) throw InvalidInput("cannot resolve thresholds from an empty set");
    spec.validate();
    std::vector<double> sorted(confidences.begin(), confidences.end());
    std::sort(sorted.begin(), sorted.end());

    ThresholdSpec out = spec;
    out.delta_unk = nearest_rank(sorted, spec.unk_quantile);
    out.delta_k = nearest_rank(sorted, 1.0 - spec.k_quantile);
    out.mode = ThresholdMode::Absolute;
    if (out.delta_unk == out.delta_k) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "degenerate confidence distribution: delta_unk == delta_k == %.17g "
                      "(n=%zu, min=%.17g, max=%.17g, %zu values tied at the threshold)",
                      out.delta_unk, sorted.size(), sorted.front(), sorted.back(),
                      static_cast<std::size_t>(std::count(sorted.begin(), sorted.end(), out.delta_unk)));
        throw DegenerateDistribution(buf);
    }
    return out;
}

ThresholdSpec resolve_thresholds(const std::vector<ProbeResult>& results, const ThresholdSpec& spec) {
    std::vector<double> c;
    c.reserve(results.size());
    for (const auto& r : results) c.push_back(r.confidence(spec.signal_kind));
    return resolve_thresholds(c, spec);
}

PartitionedSet partition(const std::vector<ProbeResult>& results, const ThresholdSpec& spec) {
    if (spec.mode != ThresholdMode::Absolute)
        throw InvalidInput("partition needs absolute thresholds; resolve quantiles first");
    spec.validate();

    std::vector<double> conf;
    conf.reserve(results.size());
    std::unordered_set<std::string_view> seen;
    for (const auto& r : results) {
        if (!seen.insert(r.question_id).second)
            throw InvalidInput("duplicate question id " + r.question_id + " in probe results");
        conf.push_back(r.confidence(spec.signal_kind));
    }

    PartitionedSet out;
    out.thresholds = spec;
    out.d_unk.reserve(kernels::count_less(conf, spec.delta_unk));
    out.d_k.reserve(kernels::count_greater(conf, spec.delta_k));
    for (std::size_t i = 0; i < results.size(); ++i) {
        const double c = conf[i];
        PartitionEntry e{results[i].question_id, results[i].prediction, c};
        if (c < spec.delta_unk) out.d_unk.push_back(std::move(e));
        else if (c > spec.delta_k) out.d_k.push_back(std::move(e));
        else ++out.excluded_count;
    }
    std::sort(out.d_unk.begin(), out.d_unk.end(), by_id);
    std::sort(out.d_k.begin(), out.d_k.end(), by_id);
    return out;
}

std::string partition_records(const PartitionedSet& set) {
    std::string out;
    for (const auto& e : set.d_unk) out += entry_json("unk", e).dump() + "\n";
    for (const auto& e : set.d_k) out += entry_json("k", e).dump() + "\n";
    return out;
}

nlohmann::json partition_manifest(const PartitionedSet& set) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& s : set.provenance) inputs.push_back({{"path", s.path}, {"checksum", s.checksum}});
    const std::size_t total = set.d_k.size() + set.d_unk.size() + set.excluded_count;
    return {{"thresholds", to_json(set.thresholds)},
            {"signal_kind", to_string(set.thresholds.signal_kind)},
            {"counts",
             {{"k", set.d_k.size()},
              {"unk", set.d_unk.size()},
              {"excluded", set.excluded_count},
              {"input", total}}},
            {"mid_band", "excluded"},
            {"inputs", inputs}};
}

void save_partition(const std::string& records_path, const std::string& manifest_path,
                    const PartitionedSet& set) {
    const std::string records = partition_records(set);
    io::write_file(records_path, records);
    nlohmann::json manifest = partition_manifest(set);
    manifest["records"] = {{"path", records_path}, {"checksum", "crc32:" + io::crc32_hex(records)}};
    io::write_file(manifest_path, manifest.dump(2) + "\n");
}

PartitionedSet load_partition(const std::string& records_path, const std::string& manifest_path) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(io::read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(manifest_path, e.what());
    }
    PartitionedSet set;
    try {
        set.thresholds = threshold_spec_from_json(manifest.at("thresholds"));
        set.excluded_count = manifest.at("counts").at("excluded").get<std::size_t>();
        for (const auto& s : manifest.at("inputs"))
            set.provenance.push_back({s.at("path").get<std::string>(), s.at("checksum").get<std::string>()});
        for (const auto& j : io::read_jsonl(records_path)) {
            PartitionEntry e{j.at("question_id").get<std::string>(), j.at("prediction").get<std::string>(),
                             j.at("confidence").get<double>()};
            const auto tag = j.at("set").get<std::string>();
            if (tag == "k") set.d_k.push_back(std::move(e));
            else if (tag == "unk") set.d_unk.push_back(std::move(e));
            else throw InvalidInput(records_path + ": unknown set tag '" + tag + "'");
        }
        const auto& counts = manifest.at("counts");
        if (counts.at("k").get<std::size_t>() != set.d_k.size() ||
            counts.at("unk").get<std::size_t>() != set.d_unk.size())
            throw InvalidInput(records_path + ": record counts disagree with " + manifest_path);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(manifest_path + ": " + e.what());
    }
    return set;
}

}  // namespace coke
