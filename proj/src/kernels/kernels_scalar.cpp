#include "talkfashion/kernels.hpp"

namespace talkfashion::kernels {
namespace {

double dot_f32_scalar(const float* a, const float* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

std::uint64_t sum_sq_diff_u8_scalar(const std::uint8_t* a, const std::uint8_t* b,
                                    std::size_t n) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
        sum += static_cast<std::uint64_t>(d * d);
    }
    return sum;
}

void select_u8_scalar(const std::uint8_t* base, const std::uint8_t* patch,
                      const std::uint8_t* sel, std::uint8_t* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = sel[i] ? patch[i] : base[i];
    }
}

void fill_where_u8_scalar(const std::uint8_t* src, const std::uint8_t* sel,
                          std::uint8_t fill, std::uint8_t* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = sel[i] ? fill : src[i];
    }
}

std::size_t count_nonzero_u8_scalar(const std::uint8_t* v, std::size_t n) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        count += v[i] != 0;
    }
    return count;
}

constexpr KernelTable kScalar{
    Isa::Scalar,         dot_f32_scalar,       sum_sq_diff_u8_scalar,
    select_u8_scalar,    fill_where_u8_scalar, count_nonzero_u8_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace talkfashion::kernels
