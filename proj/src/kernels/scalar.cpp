#include <cmath>

#include "kernels_impl.hpp"

namespace coke::kernels::detail {

namespace {

double min_scalar(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = x[i] < m ? x[i] : m;
    return m;
}

// Lane layout mirrors a 256-bit register: acc[k] takes elements i with i % 4 == k,
// lanes fold as (0+2) + (1+3), then the tail is added in order.
double fold(const double acc[4]) { return (acc[0] + acc[2]) + (acc[1] + acc[3]); }

double sum_scalar(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) acc[k] += x[i + k];
    double s = fold(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int k = 0; k < 4; ++k) acc[k] += a[i + k] * b[i + k];
    double s = fold(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

std::size_t count_less_scalar(const double* x, std::size_t n, double bound) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += x[i] < bound;
    return c;
}

std::size_t count_greater_scalar(const double* x, std::size_t n, double bound) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += x[i] > bound;
    return c;
}

void bin_counts_scalar(const double* x, std::size_t n, std::size_t bins, std::uint64_t* out) {
    const double scale = static_cast<double>(bins);
    const double top = static_cast<double>(bins - 1);
    for (std::size_t i = 0; i < n; ++i) {
        double b = std::floor(x[i] * scale);
        b = b < 0.0 ? 0.0 : (b > top ? top : b);
        ++out[static_cast<std::size_t>(b)];
    }
}

}  // namespace

const Table kScalarTable = {
    Isa::Scalar,   min_scalar,           sum_scalar,       dot_scalar, axpy_scalar,
    count_less_scalar, count_greater_scalar, bin_counts_scalar,
};

}  // namespace coke::kernels::detail
