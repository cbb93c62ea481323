#pragma once

// Independent reference implementations used to check the library. They
// share no code with src/ beyond the public data types.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "talkfashion/imaging.hpp"
#include "talkfashion/matching.hpp"

namespace oracle {

inline double mse(const talkfashion::RasterImage& a, const talkfashion::RasterImage& b) {
    double sum = 0.0;
    long n = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                const double d = double(a.at(x, y, c)) - double(b.at(x, y, c));
                sum += d * d;
                ++n;
            }
        }
    }
    return sum / double(n);
}

inline double psnr(const talkfashion::RasterImage& a, const talkfashion::RasterImage& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(255.0) - 10.0 * std::log10(m);
}

inline double luma(const talkfashion::RasterImage& img, int x, int y) {
    if (img.channels() == 1) return img.at(x, y);
    return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
}

// Direct 2-D windowed SSIM: for every valid 11x11 window position, weighted
// moments with a normalized 2-D Gaussian, then the mean of the SSIM map.
inline double ssim(const talkfashion::RasterImage& a, const talkfashion::RasterImage& b) {
    constexpr int win = 11;
    constexpr double sigma = 1.5;
    double w2[win][win];
    double total = 0.0;
    for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
            const double di = i - win / 2, dj = j - win / 2;
            w2[i][j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
            total += w2[i][j];
        }
    }
    const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
    double acc = 0.0;
    int windows = 0;
    for (int y0 = 0; y0 + win <= a.height(); ++y0) {
        for (int x0 = 0; x0 + win <= a.width(); ++x0) {
            double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < win; ++i) {
                for (int j = 0; j < win; ++j) {
                    const double w = w2[i][j] / total;
                    const double p = luma(a, x0 + j, y0 + i), q = luma(b, x0 + j, y0 + i);
                    mx += w * p;
                    my += w * q;
                    sxx += w * p * p;
                    syy += w * q * q;
                    sxy += w * p * q;
                }
            }
            const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
            acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++windows;
        }
    }
    return acc / windows;
}

inline bool eligible(talkfashion::GarmentCategory c, talkfashion::ItemKind item) {
    using talkfashion::GarmentCategory;
    using talkfashion::ItemKind;
    switch (item) {
        case ItemKind::UpperBody: return c == GarmentCategory::Top;
        case ItemKind::LowerBody: return c == GarmentCategory::Bottom;
        case ItemKind::FullBody: return c == GarmentCategory::Dress;
        case ItemKind::Unspecified: return true;
    }
    return false;
}

inline double dot(const talkfashion::EmbeddingVector& a, const talkfashion::EmbeddingVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += double(a.values()[i]) * double(b.values()[i]);
    return std::clamp(s, -1.0, 1.0);
}

struct Best {
    std::string id;
    double score;
};

// Exhaustive argmax; ties resolved toward the smaller id.
inline std::optional<Best> best_match(const talkfashion::EmbeddingVector& q,
                                      const talkfashion::Catalog& catalog,
                                      talkfashion::ItemKind item) {
    std::optional<Best> best;
    for (const auto& r : catalog.records) {
        if (!eligible(r.category, item)) continue;
        const double s = dot(q, r.embedding);
        if (!best || s > best->score || (s == best->score && r.garment_id < best->id)) {
            best = Best{r.garment_id, s};
        }
    }
    return best;
}

}  // namespace oracle
