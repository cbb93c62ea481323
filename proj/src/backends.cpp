#include "talkfashion/backends.hpp"

#include <cstdlib>

#include "talkfashion/error.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {

std::string_view to_string(BackendKind kind) noexcept {
    switch (kind) {
        case BackendKind::Chat: return "chat";
        case BackendKind::Embed: return "embed";
        case BackendKind::Refine: return "refine";
        case BackendKind::Segment: return "segment";
        case BackendKind::ParseHuman: return "parse_human";
        case BackendKind::Pose: return "pose";
        case BackendKind::TryOnImage: return "tryon_image";
        case BackendKind::EditText: return "edit_text";
    }
    return "";
}

std::string_view to_string(BackendMode mode) noexcept {
    return mode == BackendMode::Remote ? "remote" : "mock";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view s) {
    const std::string key = text::to_lower(text::trim(s));
    for (BackendKind k : kAllBackendKinds) {
        if (key == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

std::optional<BackendMode> backend_mode_from_string(std::string_view s) {
    const std::string key = text::to_lower(text::trim(s));
    if (key == "remote") return BackendMode::Remote;
    if (key == "mock") return BackendMode::Mock;
    return std::nullopt;
}

void BackendConfig::validate() const {
    const std::string who = "backend " + std::string(to_string(kind));
    if (timeout.count() <= 0) {
        throw Error(ErrorCode::InvalidArgument, who + ": timeout must be > 0");
    }
    if (retry_count < 0) {
        throw Error(ErrorCode::InvalidArgument, who + ": retry_count must be >= 0");
    }
    if (max_in_flight < 1) {
        throw Error(ErrorCode::InvalidArgument, who + ": max_in_flight must be >= 1");
    }
    if (mode == BackendMode::Remote) {
        const bool scheme = endpoint_url.rfind("http://", 0) == 0 ||
                            endpoint_url.rfind("https://", 0) == 0;
        const auto host_start = endpoint_url.find("://");
        if (!scheme || host_start == std::string::npos ||
            endpoint_url.size() <= host_start + 3 || endpoint_url[host_start + 3] == '/' ||
            endpoint_url[host_start + 3] == ':') {
            throw Error(ErrorCode::InvalidArgument,
                        who + ": remote mode needs an http(s) endpoint URL, got '" +
                            endpoint_url + "'");
        }
    }
}

void apply_env_overrides(BackendConfig& config) {
    std::string upper(to_string(config.kind));
    for (char& c : upper) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    const std::string prefix = "TF_BACKEND_" + upper;
    const char* url = std::getenv((prefix + "_URL").c_str());
    const char* mode = std::getenv((prefix + "_MODE").c_str());
    if (url && *url) {
        config.endpoint_url = url;
        config.mode = BackendMode::Remote;
    }
    if (mode && *mode) {
        const auto parsed = backend_mode_from_string(mode);
        if (!parsed) {
            throw Error(ErrorCode::InvalidArgument,
                        prefix + "_MODE must be 'remote' or 'mock', got '" + mode + "'");
        }
        config.mode = *parsed;
    }
}

void EditRequest::validate() const {
    if (mask.width() != masked_image.width() || mask.height() != masked_image.height() ||
        pose_image.width() != masked_image.width() ||
        pose_image.height() != masked_image.height()) {
        throw Error(ErrorCode::DimensionMismatch, "edit request rasters differ in size");
    }
    require_nonblank(guidance_prompt, "guidance prompt");
}

BackendMode BackendSet::mode_of(BackendKind kind) const {
    const Backend* b = nullptr;
    switch (kind) {
        case BackendKind::Chat: b = chat.get(); break;
        case BackendKind::Embed: b = embed.get(); break;
        case BackendKind::Refine: b = refine.get(); break;
        case BackendKind::Segment: b = segment.get(); break;
        case BackendKind::ParseHuman: b = parse_human.get(); break;
        case BackendKind::Pose: b = pose.get(); break;
        case BackendKind::TryOnImage: b = try_on.get(); break;
        case BackendKind::EditText: b = edit.get(); break;
    }
    if (!b) {
        throw Error(ErrorCode::InvalidArgument,
                    "no backend configured for " + std::string(to_string(kind)));
    }
    return b->mode();
}

void require_user_last(std::span<const ChatMessage> messages) {
    if (messages.empty() || messages.back().role != "user") {
        throw Error(ErrorCode::InvalidArgument, "the last chat message must have role 'user'");
    }
}

void require_nonblank(std::string_view value, std::string_view what) {
    if (text::trim(value).empty()) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be empty");
    }
}

}  // namespace talkfashion
