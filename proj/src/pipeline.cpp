#include "talkfashion/pipeline.hpp"

#include <algorithm>
#include <random>

#include "talkfashion/codec.hpp"
#include "talkfashion/matching.hpp"
#include "talkfashion/mock_backends.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kParseFailedReply =
    "Sorry, I could not understand that request. Could you phrase it differently?";
constexpr std::string_view kRegionNotFoundReply =
    "Sorry, I could not find that part of the outfit. Could you rephrase which part to change?";
constexpr std::string_view kDefaultEditedReply = "Done! Here is your new look.";

bool is_parse_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::NoStructuredBlock:
        case ErrorCode::MalformedBlock:
        case ErrorCode::UnknownFunction:
        case ErrorCode::MissingDetails:
        case ErrorCode::ItemRequired:
            return true;
        default:
            return false;
    }
}

ordered_json optional_string(const std::optional<std::string>& s) {
    return s ? ordered_json(*s) : ordered_json(nullptr);
}

// Generators may hand back gray or resized rasters; only same-size output is
// usable for compositing.
RasterImage conform(RasterImage out, const RasterImage& like, BackendKind kind) {
    if (out.width() != like.width() || out.height() != like.height()) {
        const std::string k(to_string(kind));
        throw Error(ErrorCode::ProtocolError,
                    k + " backend returned a " + std::to_string(out.width()) + "x" +
                        std::to_string(out.height()) + " image for a " +
                        std::to_string(like.width()) + "x" + std::to_string(like.height()) +
                        " input",
                    k);
    }
    return like.channels() == 3 ? mock::to_rgb(out) : out;
}

std::string random_session_id() {
    std::random_device rd;
    const auto hi = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    const auto lo = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    return text::hex64(hi) + text::hex64(lo);
}

}  // namespace

std::string ImageStore::put(const RasterImage& image) {
    return put_png(codec::encode_png(image));
}

std::string ImageStore::put_png(std::vector<std::uint8_t> png) {
    std::string id = codec::sha256_hex(png);
    std::lock_guard lock(mu_);
    images_.try_emplace(id, std::move(png));
    return id;
}

std::optional<std::vector<std::uint8_t>> ImageStore::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = images_.find(id);
    if (it == images_.end()) return std::nullopt;
    return it->second;
}

bool ImageStore::contains(const std::string& id) const {
    std::lock_guard lock(mu_);
    return images_.contains(id);
}

std::size_t ImageStore::size() const {
    std::lock_guard lock(mu_);
    return images_.size();
}

std::size_t ImageStore::retain_only(const std::set<std::string>& live) {
    std::lock_guard lock(mu_);
    return std::erase_if(images_, [&](const auto& kv) { return !live.contains(kv.first); });
}

std::string_view to_string(Outcome o) noexcept {
    switch (o) {
        case Outcome::Edited: return "edited";
        case Outcome::RefusedNotTryOn: return "refused_not_try_on";
        case Outcome::ErrorWithCode: return "error";
    }
    return "error";
}

std::string_view to_string(RouteKind r) noexcept {
    switch (r) {
        case RouteKind::ImageBased: return "image_based";
        case RouteKind::TextBased: return "text_based";
        case RouteKind::NotApplicable: return "not_applicable";
    }
    return "not_applicable";
}

ordered_json to_json(const TraceStep& s) {
    ordered_json j;
    j["step"] = s.step_index;
    j["user_text"] = s.user_text;
    j["raw_llm_response"] = s.raw_llm_response;
    j["repaired"] = s.repaired;
    if (s.invocation) {
        j["invocation"] = {{"function", to_string(s.invocation->function)},
                           {"item", to_string(s.invocation->item)},
                           {"details", s.invocation->details},
                           {"reply", s.invocation->reply}};
    } else {
        j["invocation"] = nullptr;
    }
    j["route"] = to_string(s.route);
    j["matched_garment_id"] = optional_string(s.matched_garment_id);
    j["match_score"] = s.match_score ? ordered_json(s.match_score->value) : ordered_json(nullptr);
    j["tau"] = s.tau;
    if (s.mask) {
        ordered_json m;
        m["set_bits"] = s.mask->set_bits;
        if (s.mask->bbox) {
            const auto& b = *s.mask->bbox;
            m["bbox"] = {{"x", b.x}, {"y", b.y}, {"width", b.width}, {"height", b.height}};
        } else {
            m["bbox"] = nullptr;
        }
        m["mask_image_id"] = s.mask->mask_image_id;
        j["mask"] = std::move(m);
    } else {
        j["mask"] = nullptr;
    }
    j["backend_calls"] = ordered_json::array();
    for (const auto& c : s.backend_calls) {
        j["backend_calls"].push_back({{"kind", to_string(c.kind)},
                                      {"mode", to_string(c.mode)},
                                      {"model_id", c.model_id},
                                      {"latency_ms", c.latency_ms}});
    }
    // Decimal string: JSON consumers with double-only numbers lose 64-bit seeds.
    j["seed"] = std::to_string(s.seed);
    j["outcome"] = to_string(s.outcome);
    j["error_code"] = s.error_code ? ordered_json(to_string(*s.error_code)) : ordered_json(nullptr);
    j["error_detail"] = s.error_detail;
    j["reply"] = s.reply;
    j["input_image_id"] = optional_string(s.input_image_id);
    j["output_image_id"] = optional_string(s.output_image_id);
    return j;
}

ordered_json to_json(const std::vector<TraceStep>& trace) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : trace) arr.push_back(to_json(s));
    return arr;
}

std::uint64_t step_seed(std::string_view session_id, std::size_t step_index) noexcept {
    std::uint64_t h = text::fnv1a64(session_id);
    h = text::fnv1a64(std::to_string(step_index), h ^ 0x9e3779b97f4a7c15ULL);
    // splitmix64 finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

bool valid_session_id(std::string_view id) noexcept {
    return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '-';
    });
}

Pipeline::Pipeline(BackendSet backends, PromptTemplate tmpl,
                   std::shared_ptr<const CatalogSnapshot> catalog, PipelineConfig config,
                   std::shared_ptr<ImageStore> images)
    : backends_(std::move(backends)),
      template_(std::move(tmpl)),
      config_(config),
      images_(std::move(images)),
      tau_(config.tau),
      catalog_(std::move(catalog)),
      in_flight_(std::max(config.max_in_flight, 1)) {
    if (!(config_.tau >= 0.0 && config_.tau <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau must lie in [0, 1]");
    }
    if (config_.mask_dilation < 0) {
        throw Error(ErrorCode::InvalidArgument, "mask_dilation must be >= 0");
    }
    if (config_.max_in_flight < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_in_flight must be >= 1");
    }
    if (!backends_.chat || !backends_.embed || !backends_.refine || !backends_.segment ||
        !backends_.parse_human || !backends_.pose || !backends_.try_on || !backends_.edit) {
        throw Error(ErrorCode::InvalidArgument, "every backend kind must be provided");
    }
    if (!images_) images_ = std::make_shared<ImageStore>();
    if (!catalog_) {
        auto empty = std::make_shared<CatalogSnapshot>();
        catalog_ = std::move(empty);
    }
    template_.validate();
}

std::string Pipeline::create_session(std::optional<std::string> session_id) {
    std::string id = session_id ? *session_id : random_session_id();
    if (!valid_session_id(id)) {
        throw Error(ErrorCode::InvalidArgument, "session id must be 1-64 chars of [A-Za-z0-9_-]");
    }
    auto slot = std::make_shared<Slot>();
    slot->session.session_id = id;
    slot->session.created_at = slot->session.updated_at = std::chrono::system_clock::now();
    std::unique_lock lock(sessions_mu_);
    if (!sessions_.try_emplace(id, std::move(slot)).second) {
        throw Error(ErrorCode::InvalidArgument, "session " + id + " already exists");
    }
    return id;
}

bool Pipeline::has_session(const std::string& session_id) const {
    std::shared_lock lock(sessions_mu_);
    return sessions_.contains(session_id);
}

std::shared_ptr<Pipeline::Slot> Pipeline::slot(const std::string& session_id) const {
    std::shared_lock lock(sessions_mu_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        throw Error(ErrorCode::SessionNotFound, "no session " + session_id, session_id);
    }
    return it->second;
}

void Pipeline::set_tau(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tau must lie in [0, 1]");
    }
    tau_.store(tau);
}

std::shared_ptr<const CatalogSnapshot> Pipeline::catalog() const {
    std::lock_guard lock(catalog_mu_);
    return catalog_;
}

void Pipeline::set_catalog(std::shared_ptr<const CatalogSnapshot> catalog) {
    if (!catalog) throw Error(ErrorCode::InvalidArgument, "catalog snapshot must not be null");
    std::lock_guard lock(catalog_mu_);
    catalog_ = std::move(catalog);
}

std::vector<TraceStep> Pipeline::trace(const std::string& session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->session.history;
}

std::optional<RasterImage> Pipeline::current_image(const std::string& session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->session.current_image;
}

std::size_t Pipeline::collect_expired(std::chrono::system_clock::time_point now,
                                      std::chrono::seconds ttl) {
    std::size_t dropped = 0;
    std::set<std::string> live;
    {
        std::unique_lock lock(sessions_mu_);
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            std::unique_lock session_lock(it->second->mu, std::try_to_lock);
            // A session busy with a message is in use, whatever its timestamp.
            if (session_lock.owns_lock() && now - it->second->session.updated_at > ttl) {
                session_lock.unlock();
                it = sessions_.erase(it);
                ++dropped;
                continue;
            }
            if (session_lock.owns_lock()) {
                for (const auto& step : it->second->session.history) {
                    if (step.input_image_id) live.insert(*step.input_image_id);
                    if (step.output_image_id) live.insert(*step.output_image_id);
                    if (step.mask) live.insert(step.mask->mask_image_id);
                }
                ++it;
            } else {
                return dropped;  // cannot prove which images are live; skip the sweep
            }
        }
    }
    images_->retain_only(live);
    return dropped;
}

MessageResult Pipeline::handle_message(const std::string& session_id, std::string_view user_text,
                                       std::optional<RasterImage> person_image,
                                       std::optional<std::uint64_t> seed) {
    auto s = slot(session_id);
    std::lock_guard session_lock(s->mu);
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<>& sem;
        ~Release() { sem.release(); }
    } release{in_flight_};

    Session& session = s->session;
    if (person_image) {
        if (person_image->empty()) {
            throw Error(ErrorCode::InvalidArgument, "person image must not be empty");
        }
        RasterImage rgb = mock::to_rgb(*person_image);
        session.person_image = rgb;
        session.current_image = std::move(rgb);
    }

    TraceStep step;
    step.step_index = session.history.size();
    step.user_text = std::string(user_text);
    step.seed = seed ? *seed : step_seed(session.session_id, step.step_index);
    step.tau = tau_.load();
    if (session.current_image) step.input_image_id = images_->put(*session.current_image);

    std::optional<RasterImage> result;
    try {
        run_step(session, user_text, step, result);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoPersonImage || e.code() == ErrorCode::EmptyInstruction) {
            throw;
        }
        step.outcome = Outcome::ErrorWithCode;
        step.error_code = e.code();
        step.error_detail = e.detail();
        step.reply = "Sorry, something went wrong while editing your outfit.";
        step.output_image_id.reset();
        session.history.push_back(step);
        session.updated_at = std::chrono::system_clock::now();
        throw;
    }

    if (step.outcome == Outcome::Edited) {
        session.current_image = *result;
        step.output_image_id = images_->put(*result);
    }
    session.history.push_back(step);
    session.updated_at = std::chrono::system_clock::now();
    return MessageResult{step.reply, std::move(result), std::move(step)};
}

std::string Pipeline::call_chat(const Session& session, const std::string& prompt, TraceStep& step) {
    std::vector<ChatMessage> messages;
    const auto& h = session.history;
    const std::size_t first = h.size() > config_.history_turns ? h.size() - config_.history_turns : 0;
    for (std::size_t i = first; i < h.size(); ++i) {
        messages.push_back({"user", h[i].user_text});
        if (!h[i].raw_llm_response.empty()) {
            messages.push_back({"assistant", h[i].raw_llm_response});
        }
    }
    messages.push_back({"user", prompt});
    auto r = backends_.chat->complete(messages);
    step.backend_calls.push_back(r.call);
    return std::move(r.value);
}

void Pipeline::run_step(Session& session, std::string_view user_text, TraceStep& step,
                        std::optional<RasterImage>& result) {
    const std::string prompt = render_prompt(template_, user_text);

    std::optional<ParsedResponse> parsed;
    step.raw_llm_response = call_chat(session, prompt, step);
    try {
        parsed = parse_response(step.raw_llm_response);
    } catch (const Error& e) {
        if (!is_parse_error(e.code())) throw;
        step.repaired = true;
        const std::string repair = render_repair_prompt(template_, user_text, e.what());
        step.raw_llm_response = call_chat(session, repair, step);
        try {
            parsed = parse_response(step.raw_llm_response);
        } catch (const Error& e2) {
            if (!is_parse_error(e2.code())) throw;
            step.outcome = Outcome::ErrorWithCode;
            step.error_code = ErrorCode::ParseFailed;
            step.error_detail = e2.what();
            step.reply = std::string(kParseFailedReply);
            return;
        }
    }

    if (const auto* refusal = std::get_if<NotATryOn>(&*parsed)) {
        step.outcome = Outcome::RefusedNotTryOn;
        step.reply = refusal->reply;
        return;
    }
    const Invocation& inv = std::get<Invocation>(*parsed);
    step.invocation = inv;
    if (!session.current_image) {
        throw Error(ErrorCode::NoPersonImage,
                    "upload a person image before asking for a try-on");
    }

    const RasterImage& image = *session.current_image;
    try {
        result = inv.function == FunctionKind::FullOutfitChange
                     ? run_full_outfit_change(image, inv, step)
                     : run_localized_edit(image, inv, step);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoRegionFound) throw;
        step.outcome = Outcome::ErrorWithCode;
        step.error_code = ErrorCode::RegionNotFound;
        step.error_detail = e.what();
        step.reply = std::string(kRegionNotFoundReply);
        step.mask.reset();
        result.reset();
        return;
    }
    step.outcome = Outcome::Edited;
    step.reply = inv.reply.empty() ? std::string(kDefaultEditedReply) : inv.reply;
}

BinaryMask Pipeline::record_mask(BinaryMask mask, TraceStep& step) {
    if (config_.mask_dilation > 0) mask = dilate(mask, config_.mask_dilation);
    MaskSummary summary;
    summary.set_bits = mask.count();
    summary.bbox = bounding_box(mask);
    summary.mask_image_id = images_->put(mask_to_image(mask));
    step.mask = std::move(summary);
    return mask;
}

RasterImage Pipeline::run_full_outfit_change(const RasterImage& image, const Invocation& inv,
                                             TraceStep& step) {
    auto parse = backends_.parse_human->parse(image);
    step.backend_calls.push_back(parse.call);
    if (parse.value.width() != image.width() || parse.value.height() != image.height()) {
        throw Error(ErrorCode::ProtocolError, "parse map size differs from the image",
                    std::string(to_string(BackendKind::ParseHuman)));
    }
    const BinaryMask mask = record_mask(mask_from_item(parse.value, inv.item), step);
    if (mask.is_empty()) {
        throw Error(ErrorCode::NoRegionFound,
                    "no " + std::string(to_string(inv.item)) + " region in the person image");
    }
    const RasterImage masked = apply_mask(image, mask);

    auto query = backends_.embed->embed_text(inv.details);
    step.backend_calls.push_back(query.call);

    const auto snapshot = catalog();
    std::optional<ScoredGarment> best;
    try {
        best = best_match(query.value, snapshot->catalog, inv.item);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyCatalog) throw;
    }

    RasterImage out;
    if (best) {
        step.match_score = best->score;
        const Route r = route(*best, step.tau);
        if (const auto* hit = std::get_if<ImageBased>(&r)) {
            step.route = RouteKind::ImageBased;
            step.matched_garment_id = hit->garment_id;
            const GarmentRecord* record = snapshot->find(hit->garment_id);
            const RasterImage garment = snapshot->load_image(*record);
            auto tryon = backends_.try_on->try_on(masked, garment, step.seed);
            step.backend_calls.push_back(tryon.call);
            out = conform(std::move(tryon.value), image, BackendKind::TryOnImage);
            return composite(image, out, mask);
        }
    }
    step.route = RouteKind::TextBased;

    auto refined = backends_.refine->refine(image, inv.details);
    step.backend_calls.push_back(refined.call);
    auto pose = backends_.pose->estimate(image);
    step.backend_calls.push_back(pose.call);
    EditRequest req{mask, masked, conform(std::move(pose.value), image, BackendKind::Pose),
                    std::move(refined.value), step.seed};
    req.validate();
    auto edited = backends_.edit->edit(req);
    step.backend_calls.push_back(edited.call);
    out = conform(std::move(edited.value), image, BackendKind::EditText);
    return composite(image, out, mask);
}

RasterImage Pipeline::run_localized_edit(const RasterImage& image, const Invocation& inv,
                                         TraceStep& step) {
    auto seg = backends_.segment->segment(SegmentationQuery{image, inv.details});
    step.backend_calls.push_back(seg.call);
    if (seg.value.width() != image.width() || seg.value.height() != image.height()) {
        throw Error(ErrorCode::ProtocolError, "segmentation mask size differs from the image",
                    std::string(to_string(BackendKind::Segment)));
    }
    if (seg.value.is_empty()) {
        throw Error(ErrorCode::NoRegionFound, "segmenter returned an empty mask");
    }
    const BinaryMask mask = record_mask(std::move(seg.value), step);
    auto refined = backends_.refine->refine(image, inv.details);
    step.backend_calls.push_back(refined.call);
    auto pose = backends_.pose->estimate(image);
    step.backend_calls.push_back(pose.call);
    const RasterImage masked = apply_mask(image, mask);
    EditRequest req{mask, masked, conform(std::move(pose.value), image, BackendKind::Pose),
                    std::move(refined.value), step.seed};
    req.validate();
    auto edited = backends_.edit->edit(req);
    step.backend_calls.push_back(edited.call);
    const RasterImage out = conform(std::move(edited.value), image, BackendKind::EditText);
    return composite(image, out, mask);
}

}  // namespace talkfashion
