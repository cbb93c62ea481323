#pragma once

// Data-parallel inner loops shared by imaging and matching.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 (x86-64) or NEON (aarch64) variant. The variant is
// picked once at first use from the running CPU's capabilities. Setting
// TF_SIMD=scalar in the environment pins the scalar table.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace talkfashion::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
    Isa isa;
    // sum(a[i] * b[i]) accumulated in double
    double (*dot_f32)(const float* a, const float* b, std::size_t n);
    // sum((a[i] - b[i])^2), exact
    std::uint64_t (*sum_sq_diff_u8)(const std::uint8_t* a, const std::uint8_t* b,
                                    std::size_t n);
    // out[i] = sel[i] ? patch[i] : base[i]
    void (*select_u8)(const std::uint8_t* base, const std::uint8_t* patch,
                      const std::uint8_t* sel, std::uint8_t* out, std::size_t n);
    // out[i] = sel[i] ? fill : src[i]
    void (*fill_where_u8)(const std::uint8_t* src, const std::uint8_t* sel,
                          std::uint8_t fill, std::uint8_t* out, std::size_t n);
    std::size_t (*count_nonzero_u8)(const std::uint8_t* v, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* simd_table() noexcept;

// The table every caller in the library goes through.
const KernelTable& active() noexcept;

// Test hook: replace the active table. Returns the previous one.
const KernelTable& set_active(const KernelTable& table) noexcept;

// Span conveniences over active(). Callers guarantee equal sizes.
double dot(std::span<const float> a, std::span<const float> b) noexcept;
std::uint64_t sum_sq_diff(std::span<const std::uint8_t> a,
                          std::span<const std::uint8_t> b) noexcept;
std::size_t count_nonzero(std::span<const std::uint8_t> v) noexcept;

namespace detail {
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;
}  // namespace detail

}  // namespace talkfashion::kernels
