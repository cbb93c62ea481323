#pragma once

// Deterministic stand-ins for every model. Each mock is a pure function of
// its inputs (and seed), reports latency 0, and is tuned so the shipped
// fixtures reach both routing branches.

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "talkfashion/backends.hpp"

namespace talkfashion::mock {

inline constexpr std::size_t kEmbeddingDim = 64;

struct PaletteColor {
    std::string_view name;
    std::uint8_t r, g, b;
};

// Named colours shared by the text and image embedders: colour words in text
// and nearest-palette pixels in images land in the same reserved bucket.
std::span<const PaletteColor> palette() noexcept;

// Bucket of a token in the 64-dim hashed bag-of-words space.
std::size_t token_bucket(std::string_view token);

// Centered standing figure scaled to (width, height).
ParseMap default_body_layout(int width, int height);

// Human parse used by the mocks: the fixture parse map when the image has
// the fixture's dimensions, the default layout otherwise.
class MockHumanParser final : public HumanParserBackend {
public:
    explicit MockHumanParser(std::optional<ParseMap> fixture = std::nullopt)
        : fixture_(std::move(fixture)) {}

    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<ParseMap> parse(const RasterImage& image) override;

    ParseMap layout_for(int width, int height) const;

private:
    std::optional<ParseMap> fixture_;
};

class MockChat final : public ChatBackend {
public:
    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<std::string> complete(std::span<const ChatMessage> messages) override;
};

class MockEmbedding final : public EmbeddingBackend {
public:
    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<EmbeddingVector> embed_text(std::string_view text) override;
    BackendResult<EmbeddingVector> embed_image(const RasterImage& image) override;
};

class MockRefiner final : public RefineBackend {
public:
    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<std::string> refine(const RasterImage& image,
                                      std::string_view instruction) override;
};

// Keyword rules over the parse map: sleeves/cuffs -> arms; collar/neckline ->
// top 15% rows of the upper-clothes box; hem -> bottom 20% rows of the
// relevant garment box; a garment noun alone -> that garment.
class MockSegmenter final : public SegmentBackend {
public:
    explicit MockSegmenter(std::shared_ptr<const MockHumanParser> parser)
        : parser_(std::move(parser)) {}

    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<BinaryMask> segment(const SegmentationQuery& query) override;

private:
    std::shared_ptr<const MockHumanParser> parser_;
};

// Gradient silhouette derived from the parse map.
class MockPose final : public PoseBackend {
public:
    explicit MockPose(std::shared_ptr<const MockHumanParser> parser)
        : parser_(std::move(parser)) {}

    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<RasterImage> estimate(const RasterImage& image) override;

private:
    std::shared_ptr<const MockHumanParser> parser_;
};

// Pastes the garment, scaled to the fill region's bounding box, into the
// fill-coloured pixels of the masked person.
class MockTryOn final : public TryOnBackend {
public:
    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<RasterImage> try_on(const RasterImage& masked_person, const RasterImage& garment,
                                      std::uint64_t seed) override;
};

// Fills the mask with a texture keyed by hash(guidance_prompt, seed).
class MockEditor final : public EditBackend {
public:
    BackendMode mode() const noexcept override { return BackendMode::Mock; }
    BackendResult<RasterImage> edit(const EditRequest& request) override;
};

BackendSet make_mock_backends(std::optional<ParseMap> fixture_parse = std::nullopt);

RasterImage to_rgb(const RasterImage& image);

}  // namespace talkfashion::mock
