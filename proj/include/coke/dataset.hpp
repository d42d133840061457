#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "coke/partition.hpp"
#include "coke/prompts.hpp"
#include "coke/signals.hpp"

namespace coke {

struct TrainingExample {
    std::string group_id;
    AwarenessKind kind = AwarenessKind::Direct;
    std::string prompt;
    std::string target;
    Membership membership = Membership::Known;
    ConfidenceScore confidence;

    friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

// The three prompt variants of one question, trained jointly. Examples are
// stored in Prior, Direct, Posterior order.
struct ConsistencyGroup {
    std::string group_id;
    std::string question_id;
    Membership membership = Membership::Known;
    std::array<TrainingExample, 3> examples;

    const TrainingExample& example(AwarenessKind k) const { return examples[static_cast<int>(k)]; }
    void validate() const;  // throws InvalidInput

    friend bool operator==(const ConsistencyGroup&, const ConsistencyGroup&) = default;
};

struct DatasetOptions {
    std::uint64_t seed = 0;
    // Downsample the larger of D_k / D_unk to the size of the smaller.
    bool balance = false;
};

// question_text maps question id to question text. Throws ConfigError when a
// template kind is missing and InvalidInput when a question text is unknown.
std::vector<ConsistencyGroup> build_dataset(const PartitionedSet& parts,
                                            std::span<const PromptTemplate> templates,
                                            const std::unordered_map<std::string, std::string>& question_text,
                                            const DatasetOptions& options = {});
std::vector<ConsistencyGroup> build_dataset(const PartitionedSet& parts, const TemplateSet& templates,
                                            const std::unordered_map<std::string, std::string>& question_text,
                                            const DatasetOptions& options = {});

enum class ExportFormat { Internal, SftFlat };

ExportFormat parse_export_format(std::string_view s);

nlohmann::json to_json(const ConsistencyGroup& g);
ConsistencyGroup group_from_json(const nlohmann::json& j);

std::string export_text(const std::vector<ConsistencyGroup>& groups, ExportFormat format);
void export_dataset(const std::vector<ConsistencyGroup>& groups, ExportFormat format,
                    const std::string& path);
std::vector<ConsistencyGroup> load_internal(const std::string& path);

// Recommended settings for fine-tuning an external model on the export.
nlohmann::json recommended_trainer_settings();

nlohmann::json dataset_manifest(const std::vector<ConsistencyGroup>& groups,
                                const DatasetOptions& options,
                                const std::vector<SourceFile>& sources,
                                const std::vector<SourceFile>& outputs);

}  // namespace coke
