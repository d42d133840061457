#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "coke/error.hpp"
#include "coke/io.hpp"
#include "coke/partition.hpp"

using namespace coke;

namespace {

ProbeResult result(const std::string& id, double c) {
    ProbeResult r;
    r.question_id = id;
    r.prediction = "ans-" + id;
    r.token_probs = {{c}, {"tok"}};
    r.signals = compute_all_signals(r.token_probs);
    return r;
}

std::vector<ProbeResult> results(const std::vector<double>& conf) {
    std::vector<ProbeResult> out;
    for (std::size_t i = 0; i < conf.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "q%04zu", i);
        out.push_back(result(id, conf[i]));
    }
    return out;
}

ThresholdSpec absolute(double unk, double k) {
    ThresholdSpec s;
    s.mode = ThresholdMode::Absolute;
    s.delta_unk = unk;
    s.delta_k = k;
    return s;
}

}  // namespace

TEST_CASE("nearest-rank quantiles on 0.01..1.00") {
    std::vector<double> c;
    for (int i = 1; i <= 100; ++i) c.push_back(i / 100.0);
    const auto t = resolve_thresholds(c, ThresholdSpec{});
    CHECK(t.delta_unk == doctest::Approx(0.10));
    CHECK(t.delta_k == doctest::Approx(0.80));
    CHECK(t.mode == ThresholdMode::Absolute);

    const auto p = partition(results(c), t);
    CHECK(p.d_unk.size() == 9);   // 0.01..0.09
    CHECK(p.d_k.size() == 20);    // 0.81..1.00
    CHECK(p.excluded_count == 71);
}

TEST_CASE("degenerate distribution") {
    const std::vector<double> c(50, 0.7);
    CHECK_THROWS_AS(resolve_thresholds(c, ThresholdSpec{}), DegenerateDistribution);
    CHECK_THROWS_AS(resolve_thresholds(std::vector<double>{}, ThresholdSpec{}), InvalidInput);
}

TEST_CASE("absolute thresholds, strict inequalities") {
    const auto p = partition(results({0.05, 0.5, 0.95}), absolute(0.1, 0.9));
    REQUIRE(p.d_unk.size() == 1);
    REQUIRE(p.d_k.size() == 1);
    CHECK(p.d_unk[0].question_id == "q0000");
    CHECK(p.d_k[0].question_id == "q0002");
    CHECK(p.excluded_count == 1);

    const auto ties = partition(results({0.1, 0.1, 0.9, 0.9, 0.5}), absolute(0.1, 0.9));
    CHECK(ties.d_unk.empty());
    CHECK(ties.d_k.empty());
    CHECK(ties.excluded_count == 5);
}

TEST_CASE("threshold spec validation") {
    CHECK_THROWS_AS(partition(results({0.5}), ThresholdSpec{}), InvalidInput);  // unresolved
    CHECK_THROWS_AS(partition(results({0.5}), absolute(0.9, 0.1)), InvalidInput);
    CHECK_THROWS_AS(partition(results({0.5}), absolute(-0.1, 0.5)), InvalidInput);
    ThresholdSpec s;
    s.unk_quantile = 0.6;
    s.k_quantile = 0.6;
    CHECK_THROWS_AS(s.validate(), InvalidInput);
}

TEST_CASE("properties over random samples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0001, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> c(50 + rng() % 200);
        for (auto& x : c) x = std::max(1.0, std::round(u(rng) * 200)) / 200;  // plenty of ties
        std::vector<double> sorted = c;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.front() == sorted.back()) continue;

        ThresholdSpec spec;
        ThresholdSpec t;
        try {
            t = resolve_thresholds(c, spec);
        } catch (const DegenerateDistribution&) {
            continue;
        }
        const auto p = partition(results(c), t);
        CHECK(p.d_k.size() + p.d_unk.size() + p.excluded_count == c.size());
        for (const auto& e : p.d_k) CHECK(e.confidence > t.delta_k);
        for (const auto& e : p.d_unk) CHECK(e.confidence < t.delta_unk);
        CHECK(std::is_sorted(p.d_k.begin(), p.d_k.end(),
                             [](auto& a, auto& b) { return a.question_id < b.question_id; }));

        // monotone in the thresholds
        const auto wider = partition(results(c), absolute(t.delta_unk, std::min(1.0, t.delta_k + 0.05)));
        CHECK(wider.d_k.size() <= p.d_k.size());
        const auto lower = partition(results(c), absolute(std::max(0.0, t.delta_unk - 0.05), t.delta_k));
        CHECK(lower.d_unk.size() <= p.d_unk.size());

        // permutation invariance
        auto shuffled = results(c);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(resolve_thresholds(shuffled, spec) == t);
        CHECK(partition(shuffled, t) == p);
    }
}

TEST_CASE("save and load are byte-identical") {
    const auto dir = std::filesystem::temp_directory_path() / "coke_unit_partition";
    std::filesystem::create_directories(dir);
    std::vector<double> c;
    for (int i = 1; i <= 40; ++i) c.push_back(i / 41.0);
    auto p = partition(results(c), resolve_thresholds(c, ThresholdSpec{}));
    p.provenance.push_back({"probe.jsonl", "crc32:00000000"});

    const auto rec = (dir / "p.jsonl").string(), man = (dir / "p.manifest.json").string();
    save_partition(rec, man, p);
    const auto loaded = load_partition(rec, man);
    CHECK(loaded == p);

    const auto rec2 = (dir / "p2.jsonl").string(), man2 = (dir / "p2.manifest.json").string();
    save_partition(rec2, man2, loaded);
    CHECK(io::read_file(rec) == io::read_file(rec2));

    const auto m = nlohmann::json::parse(io::read_file(man));
    CHECK(m["counts"]["k"] == p.d_k.size());
    CHECK(m["counts"]["unk"] == p.d_unk.size());
    CHECK(m["counts"]["excluded"] == p.excluded_count);
    CHECK(m["thresholds"]["delta_k"].get<double>() == p.thresholds.delta_k);
    std::filesystem::remove_all(dir);
}
