#include "talkfashion/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "talkfashion/error.hpp"
#include "talkfashion/kernels.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {
namespace {

bool eligible(const GarmentRecord& r, std::optional<GarmentCategory> wanted) {
    return !wanted || r.category == *wanted;
}

bool ranks_before(const ScoredGarment& a, const ScoredGarment& b) {
    if (a.score.value != b.score.value) {
        return a.score.value > b.score.value;
    }
    return a.garment_id < b.garment_id;
}

std::vector<ScoredGarment> score_all(const EmbeddingVector& query, const Catalog& catalog,
                                     ItemKind item_filter) {
    const auto wanted = category_for(item_filter);
    std::vector<ScoredGarment> scored;
    scored.reserve(catalog.records.size());
    for (const auto& r : catalog.records) {
        if (eligible(r, wanted)) {
            scored.push_back({r.garment_id, cosine_similarity(query, r.embedding)});
        }
    }
    if (scored.empty()) {
        throw Error(ErrorCode::EmptyCatalog,
                    std::string("no catalog garments for item ") + std::string(to_string(item_filter)));
    }
    return scored;
}

}  // namespace

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
    if (values.empty()) {
        throw Error(ErrorCode::ZeroVector, "embedding is empty");
    }
    const double norm = std::sqrt(kernels::dot(values, values));
    if (std::abs(norm - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidArgument,
                    "embedding is not unit norm (norm " + std::to_string(norm) + ")");
    }
    return EmbeddingVector(std::move(values));
}

EmbeddingVector normalize(std::span<const double> raw) {
    double sq = 0.0;
    for (double v : raw) {
        sq += v * v;
    }
    if (raw.empty() || sq == 0.0 || !std::isfinite(sq)) {
        throw Error(ErrorCode::ZeroVector, "cannot normalize a zero or non-finite vector");
    }
    const double norm = std::sqrt(sq);
    std::vector<float> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = static_cast<float>(raw[i] / norm);
    }
    return EmbeddingVector(std::move(out));
}

EmbeddingVector normalize(std::span<const float> raw) {
    const std::vector<double> wide(raw.begin(), raw.end());
    return normalize(std::span<const double>(wide));
}

MatchScore cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "embedding dims " + std::to_string(a.dim()) + " and " +
                        std::to_string(b.dim()) + " differ");
    }
    return {std::clamp(kernels::dot(a.values(), b.values()), -1.0, 1.0)};
}

std::string_view to_string(GarmentCategory c) noexcept {
    switch (c) {
        case GarmentCategory::Top: return "top";
        case GarmentCategory::Bottom: return "bottom";
        case GarmentCategory::Dress: return "dress";
    }
    return "";
}

std::optional<GarmentCategory> category_from_string(std::string_view s) {
    const std::string key = text::to_lower(text::trim(s));
    for (auto c : {GarmentCategory::Top, GarmentCategory::Bottom, GarmentCategory::Dress}) {
        if (key == to_string(c)) {
            return c;
        }
    }
    return std::nullopt;
}

std::optional<GarmentCategory> category_for(ItemKind item) noexcept {
    switch (item) {
        case ItemKind::UpperBody: return GarmentCategory::Top;
        case ItemKind::LowerBody: return GarmentCategory::Bottom;
        case ItemKind::FullBody: return GarmentCategory::Dress;
        case ItemKind::Unspecified: return std::nullopt;
    }
    return std::nullopt;
}

ScoredGarment best_match(const EmbeddingVector& query, const Catalog& catalog,
                         ItemKind item_filter) {
    auto scored = score_all(query, catalog, item_filter);
    return *std::min_element(scored.begin(), scored.end(), ranks_before);
}

std::vector<ScoredGarment> top_k(const EmbeddingVector& query, const Catalog& catalog,
                                 std::size_t k, ItemKind item_filter) {
    if (k < 1) {
        throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    }
    auto scored = score_all(query, catalog, item_filter);
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), ranks_before);
    scored.resize(k);
    return scored;
}

Route route(const ScoredGarment& best, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau must lie in [0, 1]");
    }
    if (best.score.value >= tau) {
        return ImageBased{best.garment_id, best.score};
    }
    return TextBased{best.score};
}

}  // namespace talkfashion
