#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace coke::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(COKE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Table* pick_default() noexcept {
    const Table* best = &detail::kScalarTable;
    if (const Table* t = avx2_table()) best = t;
    if (const char* env = std::getenv("COKE_KERNELS")) {
        std::string_view want(env);
        if (want == "scalar") return &detail::kScalarTable;
        if (want == "avx2" && avx2_table()) return avx2_table();
    }
    return best;
}

std::atomic<const Table*>& current() noexcept {
    static std::atomic<const Table*> table{pick_default()};
    return table;
}

}  // namespace

const char* isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

const Table& scalar_table() noexcept { return detail::kScalarTable; }

const Table* avx2_table() noexcept {
#if defined(COKE_HAVE_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &detail::kAvx2Table : nullptr;
#else
    return nullptr;
#endif
}

const Table& active() noexcept { return *current().load(std::memory_order_acquire); }

bool force(Isa isa) noexcept {
    const Table* t = isa == Isa::Scalar ? &detail::kScalarTable : avx2_table();
    if (!t) return false;
    current().store(t, std::memory_order_release);
    return true;
}

}  // namespace coke::kernels
