#include <atomic>
#include <cstdlib>
#include <cstring>

#include "talkfashion/kernels.hpp"

namespace talkfashion::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& select_initial() noexcept {
    if (const char* forced = std::getenv("TF_SIMD"); forced && std::strcmp(forced, "scalar") == 0) {
        return scalar_table();
    }
    if (const KernelTable* simd = simd_table()) {
        return *simd;
    }
    return scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> table{&select_initial()};
    return table;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

const KernelTable* simd_table() noexcept {
    if (const KernelTable* t = detail::avx2_table(); t && cpu_has_avx2()) {
        return t;
    }
    // NEON is part of the aarch64 baseline.
    return detail::neon_table();
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

const KernelTable& set_active(const KernelTable& table) noexcept {
    return *slot().exchange(&table, std::memory_order_acq_rel);
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
    return active().dot_f32(a.data(), b.data(), a.size());
}

std::uint64_t sum_sq_diff(std::span<const std::uint8_t> a,
                          std::span<const std::uint8_t> b) noexcept {
    return active().sum_sq_diff_u8(a.data(), b.data(), a.size());
}

std::size_t count_nonzero(std::span<const std::uint8_t> v) noexcept {
    return active().count_nonzero_u8(v.data(), v.size());
}

}  // namespace talkfashion::kernels
