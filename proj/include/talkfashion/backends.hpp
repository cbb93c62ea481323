#pragma once

// Uniform interface to every external model the orchestrator drives. Each
// kind has a remote HTTP client and a deterministic mock; the pipeline only
// sees these abstract handles.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "talkfashion/imaging.hpp"
#include "talkfashion/matching.hpp"

namespace talkfashion {

enum class BackendKind { Chat, Embed, Refine, Segment, ParseHuman, Pose, TryOnImage, EditText };
enum class BackendMode { Remote, Mock };

inline constexpr BackendKind kAllBackendKinds[] = {
    BackendKind::Chat,       BackendKind::Embed, BackendKind::Refine,     BackendKind::Segment,
    BackendKind::ParseHuman, BackendKind::Pose,  BackendKind::TryOnImage, BackendKind::EditText,
};

// chat, embed, refine, segment, parse_human, pose, tryon_image, edit_text
std::string_view to_string(BackendKind kind) noexcept;
std::string_view to_string(BackendMode mode) noexcept;
std::optional<BackendKind> backend_kind_from_string(std::string_view s);
std::optional<BackendMode> backend_mode_from_string(std::string_view s);

struct BackendConfig {
    BackendKind kind = BackendKind::Chat;
    BackendMode mode = BackendMode::Mock;
    std::string endpoint_url;  // remote only, e.g. http://127.0.0.1:9000
    std::chrono::milliseconds timeout{30000};
    int retry_count = 1;
    int max_in_flight = 4;

    // Throws InvalidArgument: remote mode needs an http(s) URL; timeout > 0;
    // retry_count >= 0; max_in_flight >= 1.
    void validate() const;
};

// Reads TF_BACKEND_<KIND>_URL and TF_BACKEND_<KIND>_MODE; a URL without a
// mode implies remote.
void apply_env_overrides(BackendConfig& config);

// What the trace records about one backend call.
struct CallInfo {
    BackendKind kind = BackendKind::Chat;
    BackendMode mode = BackendMode::Mock;
    std::string model_id;
    std::int64_t latency_ms = 0;  // as reported by the backend

    bool operator==(const CallInfo&) const = default;
};

template <typename T>
struct BackendResult {
    T value;
    CallInfo call;
};

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct SegmentationQuery {
    RasterImage image;
    std::string instruction;
};

// Conditioning bundle for the text-guided generator: mask, masked image,
// dense pose rendering and the refined guidance prompt. The noised latent is
// derived backend-side from `seed`.
struct EditRequest {
    BinaryMask mask;
    RasterImage masked_image;
    RasterImage pose_image;
    std::string guidance_prompt;
    std::uint64_t seed = 0;

    // Throws DimensionMismatch or InvalidArgument.
    void validate() const;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendMode mode() const noexcept = 0;
};

class ChatBackend : public Backend {
public:
    // Last message must have role "user".
    virtual BackendResult<std::string> complete(std::span<const ChatMessage> messages) = 0;
};

class EmbeddingBackend : public Backend {
public:
    virtual BackendResult<EmbeddingVector> embed_text(std::string_view text) = 0;
    virtual BackendResult<EmbeddingVector> embed_image(const RasterImage& image) = 0;
};

class RefineBackend : public Backend {
public:
    virtual BackendResult<std::string> refine(const RasterImage& image,
                                              std::string_view instruction) = 0;
};

class SegmentBackend : public Backend {
public:
    // Throws NoRegionFound when the resulting mask is empty.
    virtual BackendResult<BinaryMask> segment(const SegmentationQuery& query) = 0;
};

class HumanParserBackend : public Backend {
public:
    virtual BackendResult<ParseMap> parse(const RasterImage& image) = 0;
};

class PoseBackend : public Backend {
public:
    virtual BackendResult<RasterImage> estimate(const RasterImage& image) = 0;
};

class TryOnBackend : public Backend {
public:
    virtual BackendResult<RasterImage> try_on(const RasterImage& masked_person,
                                              const RasterImage& garment,
                                              std::uint64_t seed) = 0;
};

class EditBackend : public Backend {
public:
    virtual BackendResult<RasterImage> edit(const EditRequest& request) = 0;
};

struct BackendSet {
    std::shared_ptr<ChatBackend> chat;
    std::shared_ptr<EmbeddingBackend> embed;
    std::shared_ptr<RefineBackend> refine;
    std::shared_ptr<SegmentBackend> segment;
    std::shared_ptr<HumanParserBackend> parse_human;
    std::shared_ptr<PoseBackend> pose;
    std::shared_ptr<TryOnBackend> try_on;
    std::shared_ptr<EditBackend> edit;

    BackendMode mode_of(BackendKind kind) const;
};

// Precondition helpers shared by mock and remote implementations.
void require_user_last(std::span<const ChatMessage> messages);
void require_nonblank(std::string_view text, std::string_view what);

}  // namespace talkfashion
