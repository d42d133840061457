#pragma once

// Data-parallel inner loops used across the toolkit. Every kernel has a scalar
// reference and, where the target supports it, an AVX2 variant chosen at
// runtime. Variants produce bit-identical results: reductions in the scalar
// path accumulate in the same four-lane order the vector path uses.

#include <cstddef>
#include <cstdint>
#include <span>

namespace coke::kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa) noexcept;

struct Table {
    Isa isa;
    double (*min)(const double* x, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    std::size_t (*count_less)(const double* x, std::size_t n, double bound);
    std::size_t (*count_greater)(const double* x, std::size_t n, double bound);
    // out[b] += #{i : clamp(floor(x[i] * bins), 0, bins - 1) == b}
    void (*bin_counts)(const double* x, std::size_t n, std::size_t bins, std::uint64_t* out);
};

const Table& scalar_table() noexcept;

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const Table* avx2_table() noexcept;

// Chosen once: COKE_KERNELS=scalar|avx2 overrides, otherwise the widest
// supported variant.
const Table& active() noexcept;

// Test hook; returns false when the requested ISA is unavailable.
bool force(Isa isa) noexcept;

inline double min(std::span<const double> x) { return active().min(x.data(), x.size()); }
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}
inline std::size_t count_less(std::span<const double> x, double bound) {
    return active().count_less(x.data(), x.size(), bound);
}
inline std::size_t count_greater(std::span<const double> x, double bound) {
    return active().count_greater(x.data(), x.size(), bound);
}
inline void bin_counts(std::span<const double> x, std::span<std::uint64_t> out) {
    active().bin_counts(x.data(), x.size(), out.size(), out.data());
}

}  // namespace coke::kernels
