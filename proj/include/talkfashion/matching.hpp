#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "talkfashion/invocation.hpp"

namespace talkfashion {

// Unit-L2-norm embedding. Only normalize() and from_unit() create one.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    // Wraps values that are already unit norm (e.g. loaded from disk).
    // Throws ZeroVector if empty, InvalidArgument if the norm is off by more
    // than 1e-6.
    static EmbeddingVector from_unit(std::vector<float> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
    friend EmbeddingVector normalize(std::span<const double> raw);

    std::vector<float> values_;
};

// Throws ZeroVector for empty or all-zero input.
EmbeddingVector normalize(std::span<const double> raw);
EmbeddingVector normalize(std::span<const float> raw);

struct MatchScore {
    double value = 0.0;

    auto operator<=>(const MatchScore&) const = default;
};

// dot(a, b) for unit vectors, clamped to [-1, 1]. Throws DimensionMismatch.
MatchScore cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class GarmentCategory { Top, Bottom, Dress };

std::string_view to_string(GarmentCategory c) noexcept;
std::optional<GarmentCategory> category_from_string(std::string_view s);

// Category a garment must have to serve the given item; nullopt = any.
std::optional<GarmentCategory> category_for(ItemKind item) noexcept;

struct GarmentRecord {
    std::string garment_id;
    GarmentCategory category = GarmentCategory::Top;
    std::string caption;
    std::string image_path;  // relative to the catalog directory
    EmbeddingVector embedding;

    bool operator==(const GarmentRecord&) const = default;
};

inline constexpr int kCatalogFormatVersion = 1;

struct Catalog {
    std::vector<GarmentRecord> records;  // sorted by garment_id
    std::size_t embedding_dim = 0;
    int catalog_version = kCatalogFormatVersion;

    bool operator==(const Catalog&) const = default;
};

struct ScoredGarment {
    std::string garment_id;
    MatchScore score;

    bool operator==(const ScoredGarment&) const = default;
};

// Highest cosine score among records whose category suits `item_filter`;
// ties go to the lexicographically smallest id. Throws EmptyCatalog when no
// record passes the filter, DimensionMismatch on a dim mismatch.
ScoredGarment best_match(const EmbeddingVector& query, const Catalog& catalog,
                         ItemKind item_filter);

// Top-k by descending score, ties by ascending id. k is clamped to the
// number of eligible records. Throws EmptyCatalog, InvalidArgument (k < 1).
std::vector<ScoredGarment> top_k(const EmbeddingVector& query, const Catalog& catalog,
                                 std::size_t k, ItemKind item_filter);

struct ImageBased {
    std::string garment_id;
    MatchScore score;

    bool operator==(const ImageBased&) const = default;
};

struct TextBased {
    MatchScore score;

    bool operator==(const TextBased&) const = default;
};

using Route = std::variant<ImageBased, TextBased>;

// Image-based generation when score >= tau (boundary inclusive).
// Throws InvalidArgument unless 0 <= tau <= 1.
Route route(const ScoredGarment& best, double tau);

inline bool is_image_based(const Route& r) noexcept {
    return std::holds_alternative<ImageBased>(r);
}

}  // namespace talkfashion
