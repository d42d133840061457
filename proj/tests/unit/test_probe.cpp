#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>

#include "coke/cache.hpp"
#include "coke/error.hpp"
#include "coke/http_client.hpp"
#include "coke/io.hpp"
#include "coke/mock_server.hpp"
#include "coke/probe.hpp"
#include "coke/synthetic.hpp"

using namespace coke;

namespace {

// Answers every prompt with "Paris" split into two tokens and records which
// prompts it saw. Prompts containing a poisoned id fail.
class CountingClient final : public CompletionClient {
public:
    Completion complete(const CompletionRequest& req) override {
        {
            std::lock_guard lock(mu);
            seen.insert(req.prompt);
        }
        ++calls;
        for (const auto& p : poison)
            if (req.prompt.find(p) != std::string::npos) throw InvalidInput("poisoned");
        Completion c;
        c.tokens = {" Par", "is", "\n", "Next"};
        c.logprobs = {std::log(0.8), std::log(0.6), std::log(0.9), std::log(0.5)};
        c.model_id = "counting";
        return c;
    }

    std::atomic<int> calls{0};
    std::mutex mu;
    std::set<std::string> seen;
    std::vector<std::string> poison;
};

std::vector<QuestionRecord> make_questions(int n) {
    std::vector<QuestionRecord> qs;
    for (int i = 0; i < n; ++i) {
        const std::string id = "q" + std::to_string(i);
        qs.push_back({id, "what is item " + id + "?", {"Paris"}, "test"});
    }
    return qs;
}

EndpointConfig config() {
    EndpointConfig cfg;
    cfg.base_url = "http://unused";
    cfg.model = "m";
    cfg.retry.count = 0;
    return cfg;
}

std::string temp_path(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("coke_unit_" + name);
    std::filesystem::remove(p);
    return p.string();
}

const PromptTemplate& direct() {
    static const TemplateSet t = TemplateSet::defaults();
    return t.get(AwarenessKind::Direct);
}

}  // namespace

TEST_CASE("stop rule") {
    Completion raw;
    raw.tokens = {" ", "\t", " Par", "is", "\n", "Question"};
    raw.logprobs = {-0.1, -0.1, -0.2, -0.3, -0.4, -0.5};
    auto out = apply_stop_rule(raw, 32, {"\n"});
    CHECK(out.tokens == std::vector<std::string>{" Par", "is"});
    CHECK(out.logprobs == std::vector<double>{-0.2, -0.3});

    out = apply_stop_rule(raw, 1, {"\n"});
    CHECK(out.tokens == std::vector<std::string>{" Par"});

    raw.tokens = {"Rome", "</s>", "x"};
    raw.logprobs = {-0.1, -0.2, -0.3};
    CHECK(apply_stop_rule(raw, 32, {"\n"}).tokens == std::vector<std::string>{"Rome"});

    raw.tokens = {"Rome\nQ"};
    raw.logprobs = {-0.1};
    CHECK(apply_stop_rule(raw, 32, {"\n"}).tokens == std::vector<std::string>{"Rome"});

    raw.logprobs = {};
    CHECK_THROWS_AS(apply_stop_rule(raw, 32, {"\n"}), InvalidInput);
}

TEST_CASE("probe_question computes every signal from the kept tokens") {
    CountingClient client;
    const auto qs = make_questions(1);
    const auto r = probe_question(config(), client, qs[0], direct());
    CHECK(r.prediction == "Paris");
    CHECK(r.prompt_text == "Answer the question 'what is item q0?'");
    CHECK(r.confidence(SignalKind::MinProb) == doctest::Approx(0.6));
    CHECK(r.confidence(SignalKind::FstProb) == doctest::Approx(0.8));
    CHECK(r.confidence(SignalKind::ProdProb) == doctest::Approx(0.48));
    CHECK(r.model_id == "counting");
}

TEST_CASE("single-token budget makes the three signals equal") {
    CountingClient client;
    auto cfg = config();
    cfg.max_new_tokens = 1;
    const auto r = probe_question(cfg, client, make_questions(1)[0], direct());
    CHECK(r.confidence(SignalKind::MinProb) == r.confidence(SignalKind::FstProb));
    CHECK(r.confidence(SignalKind::MinProb) == r.confidence(SignalKind::ProdProb));
}

TEST_CASE("cache: second run is served without calls") {
    const auto path = temp_path("cache_full.jsonl");
    const auto qs = make_questions(30);
    CountingClient client;
    {
        CacheStore cache(path);
        const auto b = probe_dataset(config(), client, qs, direct(), &cache);
        CHECK(b.results.size() == 30);
        CHECK(b.cache_hits == 0);
    }
    CHECK(client.calls == 30);
    CacheStore cache(path);
    const auto b = probe_dataset(config(), client, qs, direct(), &cache);
    CHECK(client.calls == 30);
    CHECK(b.cache_hits == 30);
    for (std::size_t i = 0; i < qs.size(); ++i) CHECK(b.results[i].question_id == qs[i].id);
    std::filesystem::remove(path);
}

TEST_CASE("cache: mixed runs call only the uncached questions") {
    const auto qs = make_questions(20);
    CacheStore cache;
    CountingClient first;
    probe_dataset(config(), first, {qs.begin(), qs.begin() + 12}, direct(), &cache);

    CountingClient second;
    const auto b = probe_dataset(config(), second, qs, direct(), &cache);
    CHECK(second.calls == 8);
    CHECK(b.cache_hits == 12);
    for (int i = 12; i < 20; ++i)
        CHECK(second.seen.count(render(direct(), qs[i].text)) == 1);
}

TEST_CASE("cache: key elements force a fresh probe") {
    const auto qs = make_questions(5);
    CacheStore cache;
    CountingClient c;
    auto cfg = config();
    probe_dataset(cfg, c, qs, direct(), &cache);
    CHECK(c.calls == 5);

    auto other = cfg;
    other.model = "m2";
    probe_dataset(other, c, qs, direct(), &cache);
    CHECK(c.calls == 10);

    other = cfg;
    other.max_new_tokens = 16;
    probe_dataset(other, c, qs, direct(), &cache);
    CHECK(c.calls == 15);

    other = cfg;
    other.stop = {"\n", "."};
    probe_dataset(other, c, qs, direct(), &cache);
    CHECK(c.calls == 20);

    const PromptTemplate changed{AwarenessKind::Direct, "Q: {question}", "{answer}", "Unknown"};
    probe_dataset(cfg, c, qs, changed, &cache);
    CHECK(c.calls == 25);

    probe_dataset(cfg, c, qs, direct(), &cache);
    CHECK(c.calls == 25);
}

TEST_CASE("cache: corrupt lines count as misses") {
    const auto path = temp_path("cache_corrupt.jsonl");
    const auto qs = make_questions(4);
    CountingClient c;
    {
        CacheStore cache(path);
        probe_dataset(config(), c, qs, direct(), &cache);
    }
    // Flip one character inside the second record's payload and append junk.
    auto text = io::read_file(path);
    const auto first_nl = text.find('\n');
    const auto pos = text.find("Paris", first_nl);
    REQUIRE(pos != std::string::npos);
    text[pos] = 'X';
    text += "{not json\n";
    io::write_file(path, text);

    CacheStore cache(path);
    CHECK(cache.corrupt_records() == 2);
    c.calls = 0;
    const auto b = probe_dataset(config(), c, qs, direct(), &cache);
    CHECK(c.calls == 1);
    CHECK(b.cache_hits == 3);
    std::filesystem::remove(path);
}

TEST_CASE("failure ratio") {
    const auto qs = make_questions(2000);
    CountingClient c;
    for (int i = 0; i < 25; ++i) c.poison.push_back("item q" + std::to_string(i * 79) + "?");
    ProbeOptions opts;  // default 1%
    try {
        probe_dataset(config(), c, qs, direct(), nullptr, opts);
        FAIL("expected ProbeRunError");
    } catch (const ProbeRunError& e) {
        CHECK(e.failures().size() == 25);
        std::set<std::string> ids;
        for (const auto& f : e.failures()) ids.insert(f.question_id);
        CHECK(ids.count("q0") == 1);
        CHECK(ids.count("q79") == 1);
    }

    c.poison.resize(20);
    const auto b = probe_dataset(config(), c, qs, direct(), nullptr, opts);
    CHECK(b.results.size() == 1980);
    CHECK(b.failures.size() == 20);
}

TEST_CASE("probe results round-trip and reject tampered signals") {
    CountingClient c;
    const auto r = probe_question(config(), c, make_questions(1)[0], direct());
    auto j = to_json(r);
    const auto back = probe_result_from_json(j);
    CHECK(back.prediction == r.prediction);
    CHECK(back.signals == r.signals);
    CHECK(back.token_probs.probs == r.token_probs.probs);

    j["signals"]["min-prob"] = 0.9;
    CHECK_THROWS_AS(probe_result_from_json(j), InvalidInput);
}

TEST_CASE("question files") {
    const auto path = temp_path("questions.jsonl");
    const auto qs = make_questions(3);
    save_questions(path, qs);
    CHECK(load_questions(path) == qs);

    io::write_file(path, "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
    CHECK_THROWS_AS(load_questions(path), InvalidInput);
    io::write_file(path, "{\"id\":\"a\",\"text\":\"\"}\n");
    CHECK_THROWS_AS(load_questions(path), InvalidInput);
    std::filesystem::remove(path);
}

TEST_CASE("endpoint config violations are listed together") {
    EndpointConfig cfg;
    cfg.max_new_tokens = 0;
    cfg.max_parallel = 0;
    const auto v = cfg.violations();
    CHECK(v.size() == 4);  // base_url, model, max_new_tokens, max_parallel
    CHECK(EndpointConfig::temperature == 0.0);
}

TEST_CASE("HTTP round trip through the mock server") {
    const auto universe = SyntheticUniverse::generate({.size = 20, .seed = 3});
    SyntheticEndpoint backend(universe);
    MockCompletionServer server(backend);
    server.start();
    const auto qs = universe.questions();

    for (ApiStyle style : {ApiStyle::Completion, ApiStyle::Chat}) {
        CAPTURE(static_cast<int>(style));
        EndpointConfig cfg;
        cfg.base_url = server.base_url();
        cfg.model = "synthetic-7b";
        cfg.api = style;
        cfg.retry = {2, 1};
        HttpCompletionClient http(cfg);
        SyntheticEndpoint local(universe);
        for (std::size_t i = 0; i < 5; ++i) {
            const auto over_http = probe_question(cfg, http, qs[i], direct());
            const auto in_process = probe_question(cfg, local, qs[i], direct());
            CHECK(over_http.prediction == universe.items()[i].prediction);
            CHECK(over_http.prediction == in_process.prediction);
            CHECK(over_http.confidence(SignalKind::MinProb) ==
                  doctest::Approx(universe.items()[i].confidence).epsilon(1e-9));
        }
        if (style == ApiStyle::Chat) CHECK(http.envelope("hi") != "hi");

        server.fail_next(2);
        CHECK(probe_question(cfg, http, qs[0], direct()).prediction == universe.items()[0].prediction);

        server.fail_next(5);
        CHECK_THROWS_AS(probe_question(cfg, http, qs[0], direct()), ProbeError);
        server.fail_next(0);

        server.set_logprobs(false);
        CHECK_THROWS_AS(probe_question(cfg, http, qs[0], direct()), CapabilityError);
        CHECK_THROWS_AS(probe_dataset(cfg, http, qs, direct()), CapabilityError);
        server.set_logprobs(true);
    }
    server.stop();
}

TEST_CASE("unreachable endpoint is a probe error") {
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";
    cfg.model = "m";
    cfg.timeout_ms = 500;
    cfg.retry = {1, 1};
    HttpCompletionClient http(cfg);
    CHECK_THROWS_AS(probe_question(cfg, http, make_questions(1)[0], direct()), ProbeError);
}
