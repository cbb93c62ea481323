#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "talkfashion/invocation.hpp"

namespace talkfashion {

// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int channels, std::uint8_t fill = 0);
    RasterImage(int width, int height, int channels, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    bool empty() const noexcept { return pixels_.empty(); }
    bool same_shape(const RasterImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    std::uint8_t at(int x, int y, int c = 0) const noexcept {
        return pixels_[offset(x, y) + static_cast<std::size_t>(c)];
    }
    std::uint8_t& at(int x, int y, int c = 0) noexcept {
        return pixels_[offset(x, y) + static_cast<std::size_t>(c)];
    }

    std::span<const std::uint8_t> data() const noexcept { return pixels_; }
    std::span<std::uint8_t> data() noexcept { return pixels_; }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t offset(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> pixels_;
};

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool operator==(const Rect&) const = default;
};

// One byte per pixel holding 0 or 1; 1 marks the editable region.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool value = false);

    static BinaryMask full(int width, int height) { return {width, height, true}; }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool get(int x, int y) const noexcept { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool v = true) noexcept { bits_[index(x, y)] = v ? 1 : 0; }

    std::size_t count() const noexcept;
    bool is_empty() const noexcept { return count() == 0; }
    bool subset_of(const BinaryMask& other) const;

    BinaryMask operator|(const BinaryMask& other) const;
    BinaryMask operator&(const BinaryMask& other) const;

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    bool operator==(const BinaryMask&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Label schema agreed with the human-parsing backend.
enum class ParseLabel : std::uint8_t {
    Background = 0,
    Hair = 1,
    Face = 2,
    UpperClothes = 3,
    LowerClothes = 4,
    Dress = 5,
    Arms = 6,
    Legs = 7,
    Shoes = 8,
    Other = 9,
};
inline constexpr int kParseLabelCount = 10;

class ParseMap {
public:
    ParseMap() = default;
    ParseMap(int width, int height, ParseLabel fill = ParseLabel::Background);
    // Throws InvalidArgument if any label lies outside the schema.
    ParseMap(int width, int height, std::vector<std::uint8_t> labels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    ParseLabel get(int x, int y) const noexcept {
        return static_cast<ParseLabel>(labels_[index(x, y)]);
    }
    void set(int x, int y, ParseLabel label) noexcept {
        labels_[index(x, y)] = static_cast<std::uint8_t>(label);
    }
    std::span<const std::uint8_t> labels() const noexcept { return labels_; }

    // Mask of every pixel whose label is in `labels`.
    BinaryMask select(std::initializer_list<ParseLabel> labels) const;

    bool operator==(const ParseMap&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> labels_;
};

inline constexpr std::uint8_t kMaskFill = 128;

// UpperBody -> upper_clothes + arms; LowerBody -> lower_clothes + legs;
// FullBody -> upper + lower + dress + arms + legs. Throws ItemUnspecified.
BinaryMask mask_from_item(const ParseMap& parse, ItemKind item);

// Pixels under the mask become `fill` in every channel; the rest are copied.
RasterImage apply_mask(const RasterImage& image, const BinaryMask& mask,
                       std::uint8_t fill = kMaskFill);

// patch where mask = 1, base elsewhere.
RasterImage composite(const RasterImage& base, const RasterImage& patch, const BinaryMask& mask);

std::optional<Rect> bounding_box(const BinaryMask& mask);

// Square structuring element of the given radius; radius 0 is the identity.
BinaryMask dilate(const BinaryMask& mask, int radius);

// Soft mask (0..255 = 0.0..1.0) to binary with threshold 0.5.
BinaryMask binarize(const RasterImage& soft);
// {0, 255} single-channel rendering.
RasterImage mask_to_image(const BinaryMask& mask);

RasterImage resize_nearest(const RasterImage& image, int width, int height);

// ITU-R BT.601 luma in double precision; gray images pass through.
std::vector<double> to_luma(const RasterImage& image);

// 10 * log10(255^2 / MSE). Returns +infinity when the images are identical.
double psnr(const RasterImage& a, const RasterImage& b);

// Mean SSIM over 11x11 Gaussian windows (sigma 1.5), valid positions only,
// C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2. Colour inputs are reduced to luma.
double ssim(const RasterImage& a, const RasterImage& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

}  // namespace talkfashion
