#include "talkfashion/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "talkfashion/error.hpp"
#include "talkfashion/kernels.hpp"

namespace talkfashion {
namespace {

void require_positive(int width, int height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::InvalidArgument,
                    "raster dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    }
}

void require_same_size(const RasterImage& image, const BinaryMask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                        " does not match image " + std::to_string(image.width()) + "x" +
                        std::to_string(image.height()));
    }
}

void require_same_shape(const RasterImage& a, const RasterImage& b) {
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::DimensionMismatch, "image shapes differ");
    }
}

// Mask bits repeated per channel so the byte kernels can run over the
// interleaved buffer directly.
std::vector<std::uint8_t> expand_mask(const BinaryMask& mask, int channels) {
    const auto bits = mask.bits();
    if (channels == 1) {
        return {bits.begin(), bits.end()};
    }
    std::vector<std::uint8_t> out(bits.size() * static_cast<std::size_t>(channels));
    for (std::size_t i = 0; i < bits.size(); ++i) {
        std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(i * channels), channels, bits[i]);
    }
    return out;
}

std::array<double, kSsimWindow> gaussian_taps() {
    std::array<double, kSsimWindow> taps{};
    constexpr int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (double& t : taps) {
        t /= sum;
    }
    return taps;
}

// Separable valid-mode Gaussian filter: output is (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::array<double, kSsimWindow>& taps) {
    const int ow = w - kSsimWindow + 1;
    const int oh = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        const double* line = src.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
        double* out = rows.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(ow);
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) {
                acc += taps[static_cast<std::size_t>(k)] * line[x + k];
            }
            out[x] = acc;
        }
    }
    std::vector<double> result(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) {
                acc += taps[static_cast<std::size_t>(k)] *
                       rows[static_cast<std::size_t>(y + k) * static_cast<std::size_t>(ow) +
                            static_cast<std::size_t>(x)];
            }
            result[static_cast<std::size_t>(y) * static_cast<std::size_t>(ow) +
                   static_cast<std::size_t>(x)] = acc;
        }
    }
    return result;
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels, std::uint8_t fill)
    : RasterImage(width, height, channels,
                  std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                static_cast<std::size_t>(std::max(height, 0)) *
                                                static_cast<std::size_t>(std::max(channels, 0)),
                                            fill)) {}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
    require_positive(width, height);
    if (channels != 1 && channels != 3) {
        throw Error(ErrorCode::InvalidArgument,
                    "channels must be 1 or 3, got " + std::to_string(channels));
    }
    if (pixels_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
        throw Error(ErrorCode::InvalidArgument, "pixel buffer length does not match dimensions");
    }
}

BinaryMask::BinaryMask(int width, int height, bool value)
    : width_(width), height_(height) {
    require_positive(width, height);
    bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 value ? 1 : 0);
}

std::size_t BinaryMask::count() const noexcept { return kernels::count_nonzero(bits_); }

bool BinaryMask::subset_of(const BinaryMask& other) const {
    if (width_ != other.width_ || height_ != other.height_) {
        throw Error(ErrorCode::DimensionMismatch, "mask shapes differ");
    }
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && !other.bits_[i]) {
            return false;
        }
    }
    return true;
}

BinaryMask BinaryMask::operator|(const BinaryMask& other) const {
    if (width_ != other.width_ || height_ != other.height_) {
        throw Error(ErrorCode::DimensionMismatch, "mask shapes differ");
    }
    BinaryMask out = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        out.bits_[i] = bits_[i] | other.bits_[i];
    }
    return out;
}

BinaryMask BinaryMask::operator&(const BinaryMask& other) const {
    if (width_ != other.width_ || height_ != other.height_) {
        throw Error(ErrorCode::DimensionMismatch, "mask shapes differ");
    }
    BinaryMask out = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        out.bits_[i] = bits_[i] & other.bits_[i];
    }
    return out;
}

ParseMap::ParseMap(int width, int height, ParseLabel fill) : width_(width), height_(height) {
    require_positive(width, height);
    labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                   static_cast<std::uint8_t>(fill));
}

ParseMap::ParseMap(int width, int height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    require_positive(width, height);
    if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::InvalidArgument, "label buffer length does not match dimensions");
    }
    for (std::uint8_t label : labels_) {
        if (label >= kParseLabelCount) {
            throw Error(ErrorCode::InvalidArgument,
                        "parse label " + std::to_string(label) + " outside schema");
        }
    }
}

BinaryMask ParseMap::select(std::initializer_list<ParseLabel> wanted) const {
    std::array<bool, kParseLabelCount> lut{};
    for (ParseLabel l : wanted) {
        lut[static_cast<std::size_t>(l)] = true;
    }
    BinaryMask mask(width_, height_);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (lut[labels_[index(x, y)]]) {
                mask.set(x, y);
            }
        }
    }
    return mask;
}

BinaryMask mask_from_item(const ParseMap& parse, ItemKind item) {
    using L = ParseLabel;
    switch (item) {
        case ItemKind::UpperBody:
            return parse.select({L::UpperClothes, L::Arms});
        case ItemKind::LowerBody:
            return parse.select({L::LowerClothes, L::Legs});
        case ItemKind::FullBody:
            return parse.select({L::UpperClothes, L::LowerClothes, L::Dress, L::Arms, L::Legs});
        case ItemKind::Unspecified:
            break;
    }
    throw Error(ErrorCode::ItemUnspecified, "a clothing item is required to derive a mask");
}

RasterImage apply_mask(const RasterImage& image, const BinaryMask& mask, std::uint8_t fill) {
    require_same_size(image, mask);
    RasterImage out(image.width(), image.height(), image.channels());
    const auto sel = expand_mask(mask, image.channels());
    kernels::active().fill_where_u8(image.data().data(), sel.data(), fill, out.data().data(),
                                    sel.size());
    return out;
}

RasterImage composite(const RasterImage& base, const RasterImage& patch, const BinaryMask& mask) {
    require_same_shape(base, patch);
    require_same_size(base, mask);
    RasterImage out(base.width(), base.height(), base.channels());
    const auto sel = expand_mask(mask, base.channels());
    kernels::active().select_u8(base.data().data(), patch.data().data(), sel.data(),
                                out.data().data(), sel.size());
    return out;
}

std::optional<Rect> bounding_box(const BinaryMask& mask) {
    int min_x = std::numeric_limits<int>::max();
    int min_y = std::numeric_limits<int>::max();
    int max_x = -1;
    int max_y = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.get(x, y)) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
        }
    }
    if (max_x < 0) {
        return std::nullopt;
    }
    return Rect{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) {
        throw Error(ErrorCode::InvalidArgument, "dilation radius must be >= 0");
    }
    if (radius == 0) {
        return mask;
    }
    const int w = mask.width();
    const int h = mask.height();
    // Horizontal pass then vertical pass: a square element is separable.
    BinaryMask horiz(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.get(x, y)) {
                continue;
            }
            for (int dx = std::max(0, x - radius); dx <= std::min(w - 1, x + radius); ++dx) {
                horiz.set(dx, y);
            }
        }
    }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!horiz.get(x, y)) {
                continue;
            }
            for (int dy = std::max(0, y - radius); dy <= std::min(h - 1, y + radius); ++dy) {
                out.set(x, dy);
            }
        }
    }
    return out;
}

BinaryMask binarize(const RasterImage& soft) {
    if (soft.channels() != 1) {
        throw Error(ErrorCode::InvalidArgument, "soft mask must be single-channel");
    }
    BinaryMask mask(soft.width(), soft.height());
    for (int y = 0; y < soft.height(); ++y) {
        for (int x = 0; x < soft.width(); ++x) {
            // v / 255 >= 0.5  <=>  v >= 127.5
            if (soft.at(x, y) >= 128) {
                mask.set(x, y);
            }
        }
    }
    return mask;
}

RasterImage mask_to_image(const BinaryMask& mask) {
    RasterImage img(mask.width(), mask.height(), 1);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            img.at(x, y) = mask.get(x, y) ? 255 : 0;
        }
    }
    return img;
}

RasterImage resize_nearest(const RasterImage& image, int width, int height) {
    require_positive(width, height);
    RasterImage out(width, height, image.channels());
    for (int y = 0; y < height; ++y) {
        const int sy = static_cast<int>(static_cast<long long>(y) * image.height() / height);
        for (int x = 0; x < width; ++x) {
            const int sx = static_cast<int>(static_cast<long long>(x) * image.width() / width);
            for (int c = 0; c < image.channels(); ++c) {
                out.at(x, y, c) = image.at(sx, sy, c);
            }
        }
    }
    return out;
}

std::vector<double> to_luma(const RasterImage& image) {
    std::vector<double> luma(image.pixel_count());
    const auto px = image.data();
    if (image.channels() == 1) {
        std::copy(px.begin(), px.end(), luma.begin());
        return luma;
    }
    for (std::size_t i = 0; i < luma.size(); ++i) {
        luma[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
    }
    return luma;
}

double psnr(const RasterImage& a, const RasterImage& b) {
    require_same_shape(a, b);
    const std::uint64_t sse = kernels::sum_sq_diff(a.data(), b.data());
    if (sse == 0) {
        return std::numeric_limits<double>::infinity();
    }
    const double mse = static_cast<double>(sse) / static_cast<double>(a.data().size());
    return 10.0 * std::log10((255.0 * 255.0) / mse);
}

double ssim(const RasterImage& a, const RasterImage& b) {
    require_same_shape(a, b);
    if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
        throw Error(ErrorCode::TooSmall, "SSIM needs at least 11x11 pixels");
    }
    constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    const int w = a.width();
    const int h = a.height();
    const auto x = to_luma(a);
    const auto y = to_luma(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto taps = gaussian_taps();
    const auto mu_x = filter_valid(x, w, h, taps);
    const auto mu_y = filter_valid(y, w, h, taps);
    const auto e_xx = filter_valid(xx, w, h, taps);
    const auto e_yy = filter_valid(yy, w, h, taps);
    const auto e_xy = filter_valid(xy, w, h, taps);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double var_x = e_xx[i] - mx * mx;
        const double var_y = e_yy[i] - my * my;
        const double cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                 ((mx * mx + my * my + c1) * (var_x + var_y + c2));
    }
    return std::clamp(total / static_cast<double>(mu_x.size()), -1.0, 1.0);
}

}  // namespace talkfashion
