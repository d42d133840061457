#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "coke/dataset.hpp"
#include "coke/error.hpp"
#include "coke/io.hpp"

using namespace coke;

namespace {

PartitionedSet small_partition() {
    PartitionedSet p;
    p.d_k = {{"a", "Paris", 0.95}, {"b", "China", 0.91}};
    p.d_unk = {{"c", "Lima", 0.04}};
    p.thresholds.mode = ThresholdMode::Absolute;
    p.thresholds.delta_unk = 0.1;
    p.thresholds.delta_k = 0.9;
    return p;
}

const std::unordered_map<std::string, std::string> kText = {
    {"a", "capital of France"}, {"b", "panda is a national animal of which country"}, {"c", "capital of Mars"}};

}  // namespace

TEST_CASE("groups and targets") {
    const auto groups = build_dataset(small_partition(), TemplateSet::defaults(), kText);
    REQUIRE(groups.size() == 3);
    std::size_t examples = 0;
    for (const auto& g : groups) examples += g.examples.size();
    CHECK(examples == 9);

    for (const auto& g : groups) {
        const auto& direct = g.example(AwarenessKind::Direct);
        if (g.question_id == "b") {
            CHECK(g.membership == Membership::Known);
            CHECK(direct.target == "China");
            CHECK(g.example(AwarenessKind::Prior).target == "Yes");
            CHECK(g.example(AwarenessKind::Posterior).target == "Sure");
            CHECK(g.example(AwarenessKind::Posterior).prompt ==
                  "Are you sure that the answer to the 'panda is a national animal of which country' is 'China'");
        }
        if (g.question_id == "c") {
            CHECK(g.membership == Membership::Unknown);
            CHECK(direct.target == "Unknown");
            CHECK(g.example(AwarenessKind::Prior).target == "No");
            CHECK(g.example(AwarenessKind::Posterior).target == "Unsure");
            CHECK(direct.confidence.value == 0.04);
        }
        for (const auto& e : g.examples) CHECK(e.group_id == g.group_id);
    }
}

TEST_CASE("missing template and unknown question text") {
    const auto d = TemplateSet::defaults();
    const std::vector<PromptTemplate> two = {d.get(AwarenessKind::Prior), d.get(AwarenessKind::Direct)};
    try {
        build_dataset(small_partition(), two, kText);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.violations().size() == 1);
        CHECK(e.violations()[0].find("posterior") != std::string::npos);
    }
    auto text = kText;
    text.erase("c");
    CHECK_THROWS_AS(build_dataset(small_partition(), d, text), InvalidInput);
    CHECK_THROWS_AS(build_dataset(PartitionedSet{}, d, kText), InvalidInput);
}

TEST_CASE("order depends only on the seed") {
    PartitionedSet p;
    std::unordered_map<std::string, std::string> text;
    for (int i = 0; i < 40; ++i) {
        const std::string id = "q" + std::to_string(i);
        text[id] = "question " + id;
        (i % 3 ? p.d_k : p.d_unk).push_back({id, "ans" + std::to_string(i), i / 40.0});
    }
    const auto d = TemplateSet::defaults();
    const auto a = build_dataset(p, d, text, {.seed = 5});
    const auto b = build_dataset(p, d, text, {.seed = 5});
    const auto c = build_dataset(p, d, text, {.seed = 6});
    CHECK(a == b);
    CHECK(a != c);
    CHECK(export_text(a, ExportFormat::Internal) == export_text(b, ExportFormat::Internal));

    const auto balanced = build_dataset(p, d, text, {.seed = 5, .balance = true});
    const auto known = std::count_if(balanced.begin(), balanced.end(),
                                     [](const auto& g) { return g.membership == Membership::Known; });
    CHECK(known == static_cast<long>(p.d_unk.size()));
    CHECK(balanced.size() == 2 * p.d_unk.size());
}

TEST_CASE("exports") {
    const auto groups = build_dataset(small_partition(), TemplateSet::defaults(), kText, {.seed = 1});
    const auto flat = export_text(groups, ExportFormat::SftFlat);
    CHECK(std::count(flat.begin(), flat.end(), '\n') == 9);

    // Flat and grouped exports carry the same (prompt, target) multiset.
    std::multiset<std::pair<std::string, std::string>> from_flat, from_groups;
    std::size_t start = 0;
    while (start < flat.size()) {
        const auto nl = flat.find('\n', start);
        const auto j = nlohmann::json::parse(flat.substr(start, nl - start));
        from_flat.insert({j["prompt"].get<std::string>(), j["target"].get<std::string>()});
        start = nl + 1;
    }
    for (const auto& g : groups)
        for (const auto& e : g.examples) from_groups.insert({e.prompt, e.target});
    CHECK(from_flat == from_groups);

    const auto path = (std::filesystem::temp_directory_path() / "coke_unit_dataset.jsonl").string();
    export_dataset(groups, ExportFormat::Internal, path);
    CHECK(load_internal(path) == groups);
    std::filesystem::remove(path);

    CHECK(parse_export_format("sft-flat") == ExportFormat::SftFlat);
    CHECK_THROWS_AS(parse_export_format("csv"), InvalidInput);
}

TEST_CASE("manifest records the recommended trainer settings") {
    const auto groups = build_dataset(small_partition(), TemplateSet::defaults(), kText);
    const auto m = dataset_manifest(groups, {}, {{"partition.jsonl", "crc32:1"}}, {});
    CHECK(m.dump().find("r=8, alpha=16") != std::string::npos);
    const auto s = recommended_trainer_settings();
    CHECK(s["r"] == 8);
    CHECK(s["alpha"] == 16);
}

TEST_CASE("group validation on load") {
    const auto groups = build_dataset(small_partition(), TemplateSet::defaults(), kText);
    auto j = to_json(groups[0]);
    j["examples"].erase(0);
    CHECK_THROWS_AS(group_from_json(j), InvalidInput);
    j = to_json(groups[0]);
    j["examples"][1]["awareness_kind"] = j["examples"][0]["awareness_kind"];
    CHECK_THROWS_AS(group_from_json(j), InvalidInput);
}
