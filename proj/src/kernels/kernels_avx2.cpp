// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.

#include "talkfashion/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace talkfashion::kernels {
namespace {

double hsum_pd(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

std::uint64_t hsum_epi64(__m256i v) {
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

double dot_f32_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                               _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                               _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc1);
    }
    double sum = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

std::uint64_t sum_sq_diff_u8_avx2(const std::uint8_t* a, const std::uint8_t* b,
                                  std::size_t n) {
    // Each madd lane gains at most 2 * 255^2 per 16-byte step, so 32-bit
    // lanes are flushed to 64-bit before 2^14 steps.
    constexpr std::size_t kFlushEvery = 8192;
    __m256i total = _mm256_setzero_si256();
    std::size_t i = 0;
    while (i + 16 <= n) {
        __m256i acc = _mm256_setzero_si256();
        for (std::size_t step = 0; step < kFlushEvery && i + 16 <= n; ++step, i += 16) {
            const __m256i va = _mm256_cvtepu8_epi16(
                _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + i)));
            const __m256i vb = _mm256_cvtepu8_epi16(
                _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + i)));
            const __m256i d = _mm256_sub_epi16(va, vb);
            acc = _mm256_add_epi32(acc, _mm256_madd_epi16(d, d));
        }
        total = _mm256_add_epi64(total, _mm256_cvtepu32_epi64(_mm256_castsi256_si128(acc)));
        total = _mm256_add_epi64(total, _mm256_cvtepu32_epi64(_mm256_extracti128_si256(acc, 1)));
    }
    std::uint64_t sum = hsum_epi64(total);
    for (; i < n; ++i) {
        const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
        sum += static_cast<std::uint64_t>(d * d);
    }
    return sum;
}

void select_u8_avx2(const std::uint8_t* base, const std::uint8_t* patch,
                    const std::uint8_t* sel, std::uint8_t* out, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(base + i));
        const __m256i vp = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(patch + i));
        const __m256i vs = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(sel + i));
        const __m256i keep_base = _mm256_cmpeq_epi8(vs, zero);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i),
                            _mm256_blendv_epi8(vp, vb, keep_base));
    }
    for (; i < n; ++i) {
        out[i] = sel[i] ? patch[i] : base[i];
    }
}

void fill_where_u8_avx2(const std::uint8_t* src, const std::uint8_t* sel,
                        std::uint8_t fill, std::uint8_t* out, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    const __m256i vf = _mm256_set1_epi8(static_cast<char>(fill));
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i vsrc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
        const __m256i vs = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(sel + i));
        const __m256i keep_src = _mm256_cmpeq_epi8(vs, zero);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i),
                            _mm256_blendv_epi8(vf, vsrc, keep_src));
    }
    for (; i < n; ++i) {
        out[i] = sel[i] ? fill : src[i];
    }
}

std::size_t count_nonzero_u8_avx2(const std::uint8_t* v, std::size_t n) {
    const __m256i zero = _mm256_setzero_si256();
    std::size_t zeros = 0;
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i));
        const auto bits = static_cast<std::uint32_t>(
            _mm256_movemask_epi8(_mm256_cmpeq_epi8(x, zero)));
        zeros += static_cast<std::size_t>(__builtin_popcount(bits));
    }
    std::size_t count = i - zeros;
    for (; i < n; ++i) {
        count += v[i] != 0;
    }
    return count;
}

constexpr KernelTable kAvx2{
    Isa::Avx2,         dot_f32_avx2,       sum_sq_diff_u8_avx2,
    select_u8_avx2,    fill_where_u8_avx2, count_nonzero_u8_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() noexcept { return &kAvx2; }
}  // namespace detail

}  // namespace talkfashion::kernels

#else

namespace talkfashion::kernels::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace talkfashion::kernels::detail

#endif
