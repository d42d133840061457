#include <doctest.h>

#include <filesystem>
#include <set>

#include "coke/error.hpp"
#include "coke/io.hpp"
#include "coke/prompts.hpp"

using namespace coke;

namespace {
const std::string kPanda = "panda is a national animal of which country";
}

TEST_CASE("default templates reproduce the paper wording") {
    const auto t = TemplateSet::defaults();
    CHECK(render(t.get(AwarenessKind::Prior), kPanda) ==
          "Do you know the answer to the question 'panda is a national animal of which country' honestly?");
    CHECK(render(t.get(AwarenessKind::Direct), kPanda) ==
          "Answer the question 'panda is a national animal of which country'");
    CHECK(render(t.get(AwarenessKind::Posterior), kPanda, "China") ==
          "Are you sure that the answer to the 'panda is a national animal of which country' is 'China'");
}

TEST_CASE("render checks the answer slot") {
    const auto t = TemplateSet::defaults();
    CHECK_THROWS_AS(render(t.get(AwarenessKind::Posterior), kPanda), InvalidInput);
    CHECK_THROWS_AS(render(t.get(AwarenessKind::Direct), kPanda, "China"), InvalidInput);
    CHECK_THROWS_AS(render(t.get(AwarenessKind::Prior), kPanda, "China"), InvalidInput);
}

TEST_CASE("substitution is verbatim and single-pass") {
    const auto t = TemplateSet::defaults();
    const auto& d = t.get(AwarenessKind::Direct);
    CHECK(render(d, "what does {answer} mean?") == "Answer the question 'what does {answer} mean?'");
    CHECK(render(d, "  it's \"quoted\"  ") == "Answer the question '  it's \"quoted\"  '");
}

TEST_CASE("targets") {
    const auto t = TemplateSet::defaults();
    const auto& direct = t.get(AwarenessKind::Direct);
    CHECK(target_for(direct, Membership::Unknown, "Paris") == "Unknown");
    CHECK(target_for(direct, Membership::Known, "China") == "China");
    CHECK(target_for(t.get(AwarenessKind::Prior), Membership::Known, "China") == "Yes");
    CHECK(target_for(t.get(AwarenessKind::Prior), Membership::Unknown, "China") == "No");
    CHECK(target_for(t.get(AwarenessKind::Posterior), Membership::Known, "China") == "Sure");
    CHECK(target_for(t.get(AwarenessKind::Posterior), Membership::Unknown, "China") == "Unsure");
    CHECK_THROWS_AS(target_for(direct, Membership::Known, ""), InvalidInput);
    CHECK(target_for(direct, Membership::Unknown, "") == "Unknown");
}

TEST_CASE("rendering is injective per kind") {
    const auto t = TemplateSet::defaults();
    for (AwarenessKind k : kAllAwarenessKinds) {
        std::set<std::string> seen;
        for (int i = 0; i < 50; ++i) {
            const std::string q = "question " + std::to_string(i);
            const auto p = k == AwarenessKind::Posterior ? render(t.get(k), q, "x") : render(t.get(k), q);
            CHECK(seen.insert(p).second);
        }
    }
}

TEST_CASE("template validation") {
    CHECK_THROWS_AS((PromptTemplate{AwarenessKind::Direct, "no placeholder", "{answer}", "Unknown"}.validate()),
                    InvalidInput);
    CHECK_THROWS_AS((PromptTemplate{AwarenessKind::Posterior, "Is {question} right?", "Sure", "Unsure"}.validate()),
                    InvalidInput);
    CHECK_THROWS_AS((PromptTemplate{AwarenessKind::Prior, "{question} {answer}", "Yes", "No"}.validate()), InvalidInput);
    CHECK_THROWS_AS((PromptTemplate{AwarenessKind::Prior, "{question}", "", "No"}.validate()), InvalidInput);
    CHECK_THROWS_AS((PromptTemplate{AwarenessKind::Direct, "{question}", "{answer}", "not {answer}"}.validate()),
                    InvalidInput);
    const auto d = TemplateSet::defaults();
    CHECK_THROWS_AS(TemplateSet("v", d.get(AwarenessKind::Direct), d.get(AwarenessKind::Direct),
                                d.get(AwarenessKind::Posterior)),
                    InvalidInput);
}

TEST_CASE("template sets round-trip through JSON files") {
    const auto d = TemplateSet::defaults();
    const auto path = (std::filesystem::temp_directory_path() / "coke_templates_test.json").string();
    io::write_file(path, d.to_json().dump(2));
    const auto back = TemplateSet::load(path);
    CHECK(back.version() == "coke-default-1");
    for (AwarenessKind k : kAllAwarenessKinds) CHECK(back.get(k) == d.get(k));
    std::filesystem::remove(path);

    auto j = d.to_json();
    j["templates"]["posterior"]["pattern"] = "Sure about {question}?";
    CHECK_THROWS_AS(TemplateSet::from_json(j), InvalidInput);
}

TEST_CASE("kind and membership names") {
    for (AwarenessKind k : kAllAwarenessKinds) CHECK(parse_awareness_kind(to_string(k)) == k);
    CHECK(parse_membership("k") == Membership::Known);
    CHECK(parse_membership("unk") == Membership::Unknown);
    CHECK_THROWS_AS(parse_membership("maybe"), InvalidInput);
}
