#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "coke/kernels.hpp"

namespace k = coke::kernels;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels agree with naive loops") {
    const auto& s = k::scalar_table();
    std::mt19937_64 rng(1);
    for (std::size_t n = 1; n < 40; ++n) {
        const auto x = random_vec(rng, n, -2.0, 2.0);
        const auto y = random_vec(rng, n, -2.0, 2.0);
        double mn = x[0], sum = 0, dot = 0;
        std::size_t lt = 0, gt = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mn = std::min(mn, x[i]);
            sum += x[i];
            dot += x[i] * y[i];
            lt += x[i] < 0.25;
            gt += x[i] > 0.25;
        }
        CHECK(s.min(x.data(), n) == mn);
        CHECK(s.sum(x.data(), n) == doctest::Approx(sum).epsilon(1e-12));
        CHECK(s.dot(x.data(), y.data(), n) == doctest::Approx(dot).epsilon(1e-12));
        CHECK(s.count_less(x.data(), n, 0.25) == lt);
        CHECK(s.count_greater(x.data(), n, 0.25) == gt);
    }
}

TEST_CASE("bin_counts clamps to the edge bins") {
    const std::vector<double> x = {0.0, 0.05, 0.1, 0.55, 0.999, 1.0, -0.3, 1.7};
    std::vector<std::uint64_t> bins(10, 0);
    k::scalar_table().bin_counts(x.data(), x.size(), bins.size(), bins.data());
    CHECK(bins[0] == 3);  // 0.0, 0.05, -0.3
    CHECK(bins[1] == 1);
    CHECK(bins[5] == 1);
    CHECK(bins[9] == 3);  // 0.999, 1.0, 1.7
}

TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
    const k::Table* v = k::avx2_table();
    if (!v) {
        MESSAGE("AVX2 variant unavailable on this machine; skipping");
        return;
    }
    const auto& s = k::scalar_table();
    std::mt19937_64 rng(2);
    // Every tail length around the 4- and 16-wide blocks.
    for (std::size_t n = 0; n < 70; ++n) {
        const auto x = random_vec(rng, n, -3.0, 3.0);
        const auto y = random_vec(rng, n, -3.0, 3.0);
        if (n) CHECK(same_bits(s.min(x.data(), n), v->min(x.data(), n)));
        CHECK(same_bits(s.sum(x.data(), n), v->sum(x.data(), n)));
        CHECK(same_bits(s.dot(x.data(), y.data(), n), v->dot(x.data(), y.data(), n)));
        for (double bound : {-1.0, 0.0, 0.5, 2.9}) {
            CHECK(s.count_less(x.data(), n, bound) == v->count_less(x.data(), n, bound));
            CHECK(s.count_greater(x.data(), n, bound) == v->count_greater(x.data(), n, bound));
        }
        auto ya = y, yb = y;
        s.axpy(0.37, x.data(), ya.data(), n);
        v->axpy(0.37, x.data(), yb.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(ya[i], yb[i]));

        const auto u = random_vec(rng, n, -0.1, 1.1);
        for (std::size_t bins : {2u, 7u, 10u}) {
            std::vector<std::uint64_t> a(bins, 0), b(bins, 0);
            s.bin_counts(u.data(), n, bins, a.data());
            v->bin_counts(u.data(), n, bins, b.data());
            CHECK(a == b);
        }
    }
}

TEST_CASE("equal values and ties compare the same way in both variants") {
    const k::Table* v = k::avx2_table();
    if (!v) return;
    std::vector<double> x(37, 0.5);
    x[20] = 0.25;
    CHECK(v->min(x.data(), x.size()) == 0.25);
    CHECK(v->count_less(x.data(), x.size(), 0.5) == 1);
    CHECK(v->count_greater(x.data(), x.size(), 0.25) == 36);
}

TEST_CASE("force switches the active table") {
    const auto before = k::active().isa;
    REQUIRE(k::force(k::Isa::Scalar));
    CHECK(k::active().isa == k::Isa::Scalar);
    if (k::avx2_table()) {
        CHECK(k::force(k::Isa::Avx2));
        CHECK(k::active().isa == k::Isa::Avx2);
    } else {
        CHECK_FALSE(k::force(k::Isa::Avx2));
    }
    k::force(before);
}
