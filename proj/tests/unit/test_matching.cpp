#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/matching.hpp"
#include "test_support.hpp"

using namespace talkfashion;
using tfx::unit;

namespace {

GarmentRecord rec(std::string id, GarmentCategory c, EmbeddingVector e) {
    return {std::move(id), c, "caption", "img.png", std::move(e)};
}

ErrorCode error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Embedding, NormalizeAndZero) {
    const auto v = unit({3, 4});
    EXPECT_NEAR(v.values()[0], 0.6f, 1e-7);
    EXPECT_NEAR(v.values()[1], 0.8f, 1e-7);
    EXPECT_EQ(error_of([] { unit({0, 0, 0}); }), ErrorCode::ZeroVector);
    EXPECT_EQ(error_of([] { unit({}); }), ErrorCode::ZeroVector);
    EXPECT_EQ(error_of([] { EmbeddingVector::from_unit({1.0f, 1.0f}); }), ErrorCode::InvalidArgument);
    EXPECT_NO_THROW(EmbeddingVector::from_unit({0.6f, 0.8f}));
}

TEST(Cosine, KnownValueAndBounds) {
    // cos((1,2,3), (4,5,6)) = 32 / sqrt(14 * 77)
    EXPECT_NEAR(cosine_similarity(unit({1, 2, 3}), unit({4, 5, 6})).value, 0.974632, 1e-6);
    const auto a = unit({1, 0});
    EXPECT_NEAR(cosine_similarity(a, a).value, 1.0, 1e-7);
    EXPECT_LE(cosine_similarity(a, a).value, 1.0);
    EXPECT_NEAR(cosine_similarity(a, unit({-1, 0})).value, -1.0, 1e-7);
    EXPECT_EQ(error_of([&] { cosine_similarity(a, unit({1, 0, 0})); }), ErrorCode::DimensionMismatch);
}

TEST(Cosine, SymmetricAndBoundedProperty) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t d = 1 + rng() % 70;
        const auto a = tfx::random_unit(rng, d), b = tfx::random_unit(rng, d);
        const double s = cosine_similarity(a, b).value;
        EXPECT_EQ(s, cosine_similarity(b, a).value);
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
        EXPECT_NEAR(s, oracle::dot(a, b), 1e-12);
    }
}

TEST(BestMatch, CategoryFilterAndTieBreak) {
    Catalog c;
    c.embedding_dim = 2;
    c.records = {rec("a_top", GarmentCategory::Top, unit({1, 0})),
                 rec("b_top", GarmentCategory::Top, unit({1, 0})),
                 rec("c_jeans", GarmentCategory::Bottom, unit({0, 1})),
                 rec("d_dress", GarmentCategory::Dress, unit({1, 1}))};
    const auto q = unit({1, 0});
    EXPECT_EQ(best_match(q, c, ItemKind::UpperBody).garment_id, "a_top");  // tie -> smaller id
    EXPECT_EQ(best_match(q, c, ItemKind::LowerBody).garment_id, "c_jeans");
    EXPECT_EQ(best_match(q, c, ItemKind::FullBody).garment_id, "d_dress");
    EXPECT_EQ(best_match(q, c, ItemKind::Unspecified).garment_id, "a_top");

    Catalog tops_only;
    tops_only.embedding_dim = 2;
    tops_only.records = {c.records[0]};
    EXPECT_EQ(error_of([&] { best_match(q, tops_only, ItemKind::LowerBody); }), ErrorCode::EmptyCatalog);
    EXPECT_EQ(error_of([&] { best_match(q, Catalog{}, ItemKind::UpperBody); }), ErrorCode::EmptyCatalog);
}

TEST(BestMatch, AgreesWithExhaustiveOracle) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t dim = 2 + rng() % 30;
        Catalog c;
        c.embedding_dim = dim;
        const int n = 1 + int(rng() % 60);
        for (int i = 0; i < n; ++i) {
            c.records.push_back(rec("g" + std::to_string(1000 + rng() % 9000) + "_" + std::to_string(i),
                                    static_cast<GarmentCategory>(rng() % 3), tfx::random_unit(rng, dim)));
        }
        if (rng() % 3 == 0) c.records.push_back(rec("a_dup", c.records[0].category, c.records[0].embedding));
        std::sort(c.records.begin(), c.records.end(),
                  [](const auto& x, const auto& y) { return x.garment_id < y.garment_id; });
        const auto q = tfx::random_unit(rng, dim);
        const auto item = static_cast<ItemKind>(rng() % 4);
        const auto want = oracle::best_match(q, c, item);
        if (!want) {
            EXPECT_EQ(error_of([&] { best_match(q, c, item); }), ErrorCode::EmptyCatalog);
            continue;
        }
        const auto got = best_match(q, c, item);
        EXPECT_EQ(got.garment_id, want->id);
        EXPECT_NEAR(got.score.value, want->score, 1e-12);
    }
}

TEST(TopK, OrderedAndClamped) {
    Catalog c;
    c.embedding_dim = 2;
    c.records = {rec("a", GarmentCategory::Top, unit({1, 0})), rec("b", GarmentCategory::Top, unit({1, 1})),
                 rec("c", GarmentCategory::Top, unit({0, 1})), rec("d", GarmentCategory::Bottom, unit({1, 0}))};
    const auto hits = top_k(unit({1, 0}), c, 10, ItemKind::UpperBody);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].garment_id, "a");
    EXPECT_EQ(hits[1].garment_id, "b");
    EXPECT_EQ(hits[2].garment_id, "c");
    const auto all = top_k(unit({1, 0}), c, 2, ItemKind::Unspecified);
    ASSERT_EQ(all.size(), 2u);
    EXPECT_EQ(all[0].garment_id, "a");  // a and d tie at 1.0
    EXPECT_EQ(all[1].garment_id, "d");
    EXPECT_EQ(error_of([&] { top_k(unit({1, 0}), c, 0, ItemKind::Unspecified); }), ErrorCode::InvalidArgument);
}

TEST(Route, BoundaryIsInclusive) {
    const ScoredGarment g{"x", {0.5}};
    EXPECT_TRUE(is_image_based(route(g, 0.5)));
    EXPECT_EQ(std::get<ImageBased>(route(g, 0.5)).garment_id, "x");
    EXPECT_FALSE(is_image_based(route(g, std::nextafter(0.5, 1.0))));
    EXPECT_TRUE(is_image_based(route(g, std::nextafter(0.5, 0.0))));
    EXPECT_EQ(std::get<TextBased>(route(g, 0.9)).score.value, 0.5);
    EXPECT_FALSE(is_image_based(route({"y", {-1.0}}, 0.0)));
    EXPECT_TRUE(is_image_based(route({"y", {0.0}}, 0.0)));
    EXPECT_TRUE(is_image_based(route({"y", {1.0}}, 1.0)));
    EXPECT_EQ(error_of([&] { route(g, -0.01); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_of([&] { route(g, 1.01); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_of([&] { route(g, std::nan("")); }), ErrorCode::InvalidArgument);
}

TEST(Category, NamesAndItems) {
    EXPECT_EQ(category_from_string(" Dress "), GarmentCategory::Dress);
    EXPECT_EQ(category_from_string("hat"), std::nullopt);
    EXPECT_EQ(category_for(ItemKind::UpperBody), GarmentCategory::Top);
    EXPECT_EQ(category_for(ItemKind::LowerBody), GarmentCategory::Bottom);
    EXPECT_EQ(category_for(ItemKind::FullBody), GarmentCategory::Dress);
    EXPECT_EQ(category_for(ItemKind::Unspecified), std::nullopt);
}
