#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coke/probe.hpp"
#include "coke/signals.hpp"

namespace coke {

enum class ThresholdMode { QuantileDerived, Absolute };

struct ThresholdSpec {
    double delta_unk = 0.0;
    double delta_k = 0.0;
    ThresholdMode mode = ThresholdMode::QuantileDerived;
    double unk_quantile = 0.10;  // bottom share that becomes D_unk
    double k_quantile = 0.20;    // top share that becomes D_k
    SignalKind signal_kind = SignalKind::MinProb;

    void validate() const;  // throws InvalidInput

    friend bool operator==(const ThresholdSpec&, const ThresholdSpec&) = default;
};

nlohmann::json to_json(const ThresholdSpec& s);
ThresholdSpec threshold_spec_from_json(const nlohmann::json& j);

struct PartitionEntry {
    std::string question_id;
    std::string prediction;
    double confidence = 0.0;

    friend bool operator==(const PartitionEntry&, const PartitionEntry&) = default;
};

struct SourceFile {
    std::string path;
    std::string checksum;

    friend bool operator==(const SourceFile&, const SourceFile&) = default;
};

struct PartitionedSet {
    std::vector<PartitionEntry> d_k;    // confidence > delta_k, sorted by question_id
    std::vector<PartitionEntry> d_unk;  // confidence < delta_unk, sorted by question_id
    ThresholdSpec thresholds;           // resolved, mode Absolute
    std::size_t excluded_count = 0;     // mid-band, including boundary ties
    std::vector<SourceFile> provenance;

    friend bool operator==(const PartitionedSet&, const PartitionedSet&) = default;
};

// Nearest-rank empirical quantile of an ascending sample: the value at rank
// ceil(q * n), 1-based.
double nearest_rank(std::span<const double> sorted, double q);

ThresholdSpec resolve_thresholds(std::span<const double> confidences, const ThresholdSpec& spec);
ThresholdSpec resolve_thresholds(const std::vector<ProbeResult>& results, const ThresholdSpec& spec);

PartitionedSet partition(const std::vector<ProbeResult>& results, const ThresholdSpec& spec);

// Line-delimited partition records tagged "k" / "unk".
std::string partition_records(const PartitionedSet& set);
nlohmann::json partition_manifest(const PartitionedSet& set);

void save_partition(const std::string& records_path, const std::string& manifest_path,
                    const PartitionedSet& set);
PartitionedSet load_partition(const std::string& records_path, const std::string& manifest_path);

}  // namespace coke
