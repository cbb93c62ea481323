#pragma once

// Session state machine: prompt -> LLM -> parse -> mask -> route or localized
// edit -> post-composite -> reply, with a trace step per message.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <semaphore>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "talkfashion/backends.hpp"
#include "talkfashion/catalog_store.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/imaging.hpp"
#include "talkfashion/prompt_engine.hpp"
#include "talkfashion/response_parser.hpp"

namespace talkfashion {

// PNG bytes keyed by their SHA-256. Thread-safe.
class ImageStore {
public:
    std::string put(const RasterImage& image);
    std::string put_png(std::vector<std::uint8_t> png);
    std::optional<std::vector<std::uint8_t>> get(const std::string& id) const;
    bool contains(const std::string& id) const;
    std::size_t size() const;

    // Drops every image not in `live`; returns how many were dropped.
    std::size_t retain_only(const std::set<std::string>& live);

private:
    mutable std::mutex mu_;
    std::map<std::string, std::vector<std::uint8_t>> images_;
};

enum class Outcome { Edited, RefusedNotTryOn, ErrorWithCode };
enum class RouteKind { ImageBased, TextBased, NotApplicable };

std::string_view to_string(Outcome o) noexcept;
std::string_view to_string(RouteKind r) noexcept;

struct MaskSummary {
    std::size_t set_bits = 0;
    std::optional<Rect> bbox;
    std::string mask_image_id;

    bool operator==(const MaskSummary&) const = default;
};

struct TraceStep {
    std::size_t step_index = 0;
    std::string user_text;
    std::string raw_llm_response;
    bool repaired = false;  // the repair retry was used
    std::optional<Invocation> invocation;
    RouteKind route = RouteKind::NotApplicable;
    std::optional<std::string> matched_garment_id;
    std::optional<MatchScore> match_score;
    double tau = 0.0;
    std::optional<MaskSummary> mask;
    std::vector<CallInfo> backend_calls;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::ErrorWithCode;
    std::optional<ErrorCode> error_code;
    std::string error_detail;
    std::string reply;
    std::optional<std::string> input_image_id;
    std::optional<std::string> output_image_id;

    bool operator==(const TraceStep&) const = default;
};

nlohmann::ordered_json to_json(const TraceStep& step);
nlohmann::ordered_json to_json(const std::vector<TraceStep>& trace);

struct Session {
    std::string session_id;
    std::optional<RasterImage> person_image;
    std::optional<RasterImage> current_image;
    std::vector<TraceStep> history;
    std::chrono::system_clock::time_point created_at;
    std::chrono::system_clock::time_point updated_at;
};

struct PipelineConfig {
    double tau = 0.5;
    int mask_dilation = 0;
    std::size_t history_turns = 4;
    int max_in_flight = 8;
};

struct MessageResult {
    std::string reply;
    std::optional<RasterImage> image;
    TraceStep step;
};

// Per-step seed when the caller does not pin one.
std::uint64_t step_seed(std::string_view session_id, std::size_t step_index) noexcept;

// Session ids: 1-64 chars of [A-Za-z0-9_-].
bool valid_session_id(std::string_view id) noexcept;

class Pipeline {
public:
    // Throws InvalidArgument (tau out of range, negative dilation) or
    // InvalidTemplate.
    Pipeline(BackendSet backends, PromptTemplate tmpl,
             std::shared_ptr<const CatalogSnapshot> catalog, PipelineConfig config = {},
             std::shared_ptr<ImageStore> images = std::make_shared<ImageStore>());

    // Random id when none is given. Throws InvalidArgument (bad or taken id).
    std::string create_session(std::optional<std::string> session_id = std::nullopt);
    bool has_session(const std::string& session_id) const;

    // Throws SessionNotFound; NoPersonImage when a try-on is requested
    // before any person image; backend errors (after recording the failed
    // step). Parse failures, refusals and missing regions come back as
    // trace outcomes instead.
    MessageResult handle_message(const std::string& session_id, std::string_view user_text,
                                 std::optional<RasterImage> person_image = std::nullopt,
                                 std::optional<std::uint64_t> seed = std::nullopt);

    // Throws SessionNotFound.
    std::vector<TraceStep> trace(const std::string& session_id) const;
    std::optional<RasterImage> current_image(const std::string& session_id) const;

    // Drops sessions idle longer than `ttl` and their images.
    std::size_t collect_expired(std::chrono::system_clock::time_point now,
                                std::chrono::seconds ttl);

    double tau() const noexcept { return tau_.load(); }
    // Throws InvalidArgument unless 0 <= tau <= 1.
    void set_tau(double tau);

    std::shared_ptr<const CatalogSnapshot> catalog() const;
    void set_catalog(std::shared_ptr<const CatalogSnapshot> catalog);

    const BackendSet& backends() const noexcept { return backends_; }
    ImageStore& images() noexcept { return *images_; }

private:
    struct Slot {
        std::mutex mu;  // serializes messages within the session
        Session session;
    };

    std::shared_ptr<Slot> slot(const std::string& session_id) const;
    void run_step(Session& session, std::string_view user_text, TraceStep& step,
                  std::optional<RasterImage>& result);
    std::string call_chat(const Session& session, const std::string& prompt, TraceStep& step);
    RasterImage run_full_outfit_change(const RasterImage& image, const Invocation& inv,
                                       TraceStep& step);
    RasterImage run_localized_edit(const RasterImage& image, const Invocation& inv,
                                   TraceStep& step);
    BinaryMask record_mask(BinaryMask mask, TraceStep& step);

    BackendSet backends_;
    PromptTemplate template_;
    PipelineConfig config_;
    std::shared_ptr<ImageStore> images_;
    std::atomic<double> tau_;

    mutable std::mutex catalog_mu_;
    std::shared_ptr<const CatalogSnapshot> catalog_;

    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;

    std::counting_semaphore<> in_flight_;
};

}  // namespace talkfashion
