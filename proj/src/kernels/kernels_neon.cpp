#include "talkfashion/kernels.hpp"

#if defined(__aarch64__) || defined(_M_ARM64)
#include <arm_neon.h>

namespace talkfashion::kernels {
namespace {

double dot_f32_neon(const float* a, const float* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

std::uint64_t sum_sq_diff_u8_neon(const std::uint8_t* a, const std::uint8_t* b,
                                  std::size_t n) {
    uint64x2_t total = vdupq_n_u64(0);
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const uint8x16_t d = vabdq_u8(vld1q_u8(a + i), vld1q_u8(b + i));
        const uint16x8_t lo = vmull_u8(vget_low_u8(d), vget_low_u8(d));
        const uint16x8_t hi = vmull_high_u8(d, d);
        const uint32x4_t s = vaddq_u32(vpaddlq_u16(lo), vpaddlq_u16(hi));
        total = vpadalq_u32(total, s);
    }
    std::uint64_t sum = vaddvq_u64(total);
    for (; i < n; ++i) {
        const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
        sum += static_cast<std::uint64_t>(d * d);
    }
    return sum;
}

void select_u8_neon(const std::uint8_t* base, const std::uint8_t* patch,
                    const std::uint8_t* sel, std::uint8_t* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const uint8x16_t vs = vld1q_u8(sel + i);
        const uint8x16_t take_patch = vtstq_u8(vs, vs);
        vst1q_u8(out + i, vbslq_u8(take_patch, vld1q_u8(patch + i), vld1q_u8(base + i)));
    }
    for (; i < n; ++i) {
        out[i] = sel[i] ? patch[i] : base[i];
    }
}

void fill_where_u8_neon(const std::uint8_t* src, const std::uint8_t* sel,
                        std::uint8_t fill, std::uint8_t* out, std::size_t n) {
    const uint8x16_t vf = vdupq_n_u8(fill);
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const uint8x16_t vs = vld1q_u8(sel + i);
        vst1q_u8(out + i, vbslq_u8(vtstq_u8(vs, vs), vf, vld1q_u8(src + i)));
    }
    for (; i < n; ++i) {
        out[i] = sel[i] ? fill : src[i];
    }
}

std::size_t count_nonzero_u8_neon(const std::uint8_t* v, std::size_t n) {
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const uint8x16_t x = vld1q_u8(v + i);
        const uint8x16_t ones = vandq_u8(vtstq_u8(x, x), vdupq_n_u8(1));
        count += vaddvq_u8(ones);
    }
    for (; i < n; ++i) {
        count += v[i] != 0;
    }
    return count;
}

constexpr KernelTable kNeon{
    Isa::Neon,         dot_f32_neon,       sum_sq_diff_u8_neon,
    select_u8_neon,    fill_where_u8_neon, count_nonzero_u8_neon,
};

}  // namespace

namespace detail {
const KernelTable* neon_table() noexcept { return &kNeon; }
}  // namespace detail

}  // namespace talkfashion::kernels

#else

namespace talkfashion::kernels::detail {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace talkfashion::kernels::detail

#endif
