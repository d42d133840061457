#include <immintrin.h>

#include <bit>
#include <cmath>

#include "kernels_impl.hpp"

namespace coke::kernels::detail {

namespace {

double hfold(__m256d acc) {
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double min_avx2(const double* x, std::size_t n) {
    if (n < 4) {
        double m = x[0];
        for (std::size_t i = 1; i < n; ++i) m = x[i] < m ? x[i] : m;
        return m;
    }
    __m256d m = _mm256_loadu_pd(x);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) m = _mm256_min_pd(m, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, m);
    double r = lanes[0];
    for (int k = 1; k < 4; ++k) r = lanes[k] < r ? lanes[k] : r;
    for (; i < n; ++i) r = x[i] < r ? x[i] : r;
    return r;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hfold(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    double s = hfold(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

std::size_t count_less_avx2(const double* x, std::size_t n, double bound) {
    const __m256d vb = _mm256_set1_pd(bound);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(x + i), vb, _CMP_LT_OQ));
        c += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(mask)));
    }
    for (; i < n; ++i) c += x[i] < bound;
    return c;
}

std::size_t count_greater_avx2(const double* x, std::size_t n, double bound) {
    const __m256d vb = _mm256_set1_pd(bound);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(x + i), vb, _CMP_GT_OQ));
        c += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(mask)));
    }
    for (; i < n; ++i) c += x[i] > bound;
    return c;
}

void bin_counts_avx2(const double* x, std::size_t n, std::size_t bins, std::uint64_t* out) {
    const double scale = static_cast<double>(bins);
    const double top = static_cast<double>(bins - 1);
    const __m256d vs = _mm256_set1_pd(scale);
    const __m256d vtop = _mm256_set1_pd(top);
    const __m256d vzero = _mm256_setzero_pd();
    std::size_t i = 0;
    alignas(16) std::int32_t idx[4];
    for (; i + 4 <= n; i += 4) {
        __m256d b = _mm256_floor_pd(_mm256_mul_pd(_mm256_loadu_pd(x + i), vs));
        b = _mm256_min_pd(_mm256_max_pd(b, vzero), vtop);
        _mm_store_si128(reinterpret_cast<__m128i*>(idx), _mm256_cvttpd_epi32(b));
        for (int k = 0; k < 4; ++k) ++out[idx[k]];
    }
    for (; i < n; ++i) {
        double b = std::floor(x[i] * scale);
        b = b < 0.0 ? 0.0 : (b > top ? top : b);
        ++out[static_cast<std::size_t>(b)];
    }
}

}  // namespace

const Table kAvx2Table = {
    Isa::Avx2,       min_avx2,           sum_avx2,       dot_avx2, axpy_avx2,
    count_less_avx2, count_greater_avx2, bin_counts_avx2,
};

}  // namespace coke::kernels::detail
