#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "coke/error.hpp"
#include "coke/signals.hpp"

using namespace coke;

TEST_CASE("signal examples") {
    const std::vector<double> p = {0.9, 0.5, 0.7};
    CHECK(std::abs(compute_signal(p, SignalKind::MinProb) - 0.5) <= 1e-12);
    CHECK(std::abs(compute_signal(p, SignalKind::FstProb) - 0.9) <= 1e-12);
    CHECK(std::abs(compute_signal(p, SignalKind::ProdProb) - 0.315) <= 1e-12);

    for (SignalKind k : kAllSignalKinds) {
        CHECK(compute_signal(std::vector<double>{1.0}, k) == 1.0);
        CHECK(compute_signal(std::vector<double>{1.0, 1.0, 1.0}, k) == 1.0);
    }
}

TEST_CASE("compute_all_signals") {
    const TokenProbSequence seq{{0.5, 0.5}, {"a", "b"}};
    const auto s = compute_all_signals(seq);
    CHECK(s[SignalKind::MinProb].value == 0.5);
    CHECK(s[SignalKind::FstProb].value == 0.5);
    CHECK(std::abs(s[SignalKind::ProdProb].value - 0.25) <= 1e-12);
    for (SignalKind k : kAllSignalKinds) CHECK(s[k].kind == k);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    for (int n = 0; n < 200; ++n) {
        TokenProbSequence q;
        const int m = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < m; ++i) {
            q.probs.push_back(u(rng));
            q.tokens.push_back("t");
        }
        const auto all = compute_all_signals(q);
        for (SignalKind k : kAllSignalKinds) CHECK(all[k] == compute_signal(q, k));
    }
}

TEST_CASE("invalid sequences are rejected") {
    CHECK_THROWS_AS(compute_signal(std::vector<double>{}, SignalKind::MinProb), InvalidInput);
    CHECK_THROWS_AS(compute_signal(std::vector<double>{0.5, 0.0}, SignalKind::ProdProb), InvalidInput);
    CHECK_THROWS_AS(compute_signal(std::vector<double>{1.5}, SignalKind::FstProb), InvalidInput);
    CHECK_THROWS_AS(compute_signal(std::vector<double>{std::nan("")}, SignalKind::MinProb), InvalidInput);
    CHECK_THROWS_AS((TokenProbSequence{{0.5}, {"a", "b"}}.validate()), InvalidInput);
}

TEST_CASE("signal properties") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int n = 0; n < 300; ++n) {
        std::vector<double> p(1 + rng() % 12);
        for (auto& x : p) x = u(rng);
        const double mn = compute_signal(p, SignalKind::MinProb);
        const double fst = compute_signal(p, SignalKind::FstProb);
        const double prod = compute_signal(p, SignalKind::ProdProb);
        CHECK(mn >= prod);
        CHECK(fst >= mn);

        // permutation: min and prod unchanged
        auto q = p;
        std::reverse(q.begin(), q.end());
        CHECK(compute_signal(q, SignalKind::MinProb) == mn);
        CHECK(std::abs(compute_signal(q, SignalKind::ProdProb) - prod) <= 1e-12);
        if (q.front() != p.front()) CHECK(compute_signal(q, SignalKind::FstProb) != fst);

        // a certain token appended changes nothing
        auto r = p;
        r.push_back(1.0);
        CHECK(compute_signal(r, SignalKind::MinProb) == mn);
        CHECK(compute_signal(r, SignalKind::FstProb) == fst);
        CHECK(compute_signal(r, SignalKind::ProdProb) == prod);
    }
    // equality iff every other token is certain
    CHECK(compute_signal(std::vector<double>{1.0, 0.3, 1.0}, SignalKind::ProdProb) ==
          compute_signal(std::vector<double>{1.0, 0.3, 1.0}, SignalKind::MinProb));
    CHECK(compute_signal(std::vector<double>{0.99, 0.3}, SignalKind::ProdProb) <
          compute_signal(std::vector<double>{0.99, 0.3}, SignalKind::MinProb));
}

TEST_CASE("long sequences do not underflow to zero") {
    std::vector<double> p(2000, 0.5);
    const double prod = compute_signal(p, SignalKind::ProdProb);
    CHECK(prod > 0.0);
    CHECK(prod <= compute_signal(p, SignalKind::MinProb));
}

TEST_CASE("kind names round-trip") {
    for (SignalKind k : kAllSignalKinds) CHECK(parse_signal_kind(to_string(k)) == k);
    CHECK(to_string(SignalKind::MinProb) == "min-prob");
    CHECK(to_string(SignalKind::FstProb) == "fst-prob");
    CHECK(to_string(SignalKind::ProdProb) == "prod-prob");
    CHECK_THROWS_AS(parse_signal_kind("max-prob"), InvalidInput);
}

TEST_CASE("from_logprobs converts once and clamps rounding noise") {
    const std::vector<double> lp = {std::log(0.5), 1e-9, std::log(0.25)};
    const auto seq = TokenProbSequence::from_logprobs({"a", "b", "c"}, lp);
    CHECK(seq.probs[0] == doctest::Approx(0.5));
    CHECK(seq.probs[1] == 1.0);
    CHECK(seq.probs[2] == doctest::Approx(0.25));
}
