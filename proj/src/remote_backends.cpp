#include "talkfashion/remote_backends.hpp"

#include <httplib.h>

#include <chrono>
#include <nlohmann/json.hpp>
#include <semaphore>
#include <thread>

#include "talkfashion/codec.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/mock_backends.hpp"

namespace talkfashion {
namespace {

using nlohmann::json;

struct Endpoint {
    std::string scheme_host_port;
    std::string base_path;
};

Endpoint split_url(const std::string& url) {
    const auto host_start = url.find("://") + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        return {url, ""};
    }
    std::string base = url.substr(path_start);
    while (!base.empty() && base.back() == '/') {
        base.pop_back();
    }
    return {url.substr(0, path_start), base};
}

struct RemoteReply {
    json body;
    CallInfo call;
};

// Shared transport: bounded in-flight calls, per-attempt timeouts and
// retry_count retries on connection failures, timeouts and 5xx replies.
class RemoteClient {
public:
    explicit RemoteClient(BackendConfig config)
        : config_(validated(std::move(config))),
          endpoint_(split_url(config_.endpoint_url)),
          slots_(config_.max_in_flight) {}

    RemoteReply post(std::string_view path, const json& request) {
        const std::string body = request.dump(-1, ' ', false, json::error_handler_t::replace);
        const std::string target = endpoint_.base_path + std::string(path);
        const std::string kind(to_string(config_.kind));

        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};

        bool timed_out = false;
        std::string last_problem;
        for (int attempt = 0; attempt <= config_.retry_count; ++attempt) {
            httplib::Client cli(endpoint_.scheme_host_port);
            const auto ms = config_.timeout.count();
            cli.set_connection_timeout(std::chrono::milliseconds(ms));
            cli.set_read_timeout(std::chrono::milliseconds(ms));
            cli.set_write_timeout(std::chrono::milliseconds(ms));

            auto res = cli.Post(target, body, "application/json");
            if (!res) {
                const auto err = res.error();
                timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
                last_problem = httplib::to_string(err);
                continue;
            }
            if (res->status >= 500) {
                timed_out = false;
                last_problem = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw Error(ErrorCode::ProtocolError,
                            kind + " backend replied HTTP " + std::to_string(res->status), kind);
            }
            return decode(res->body);
        }
        if (timed_out) {
            throw Error(ErrorCode::Timeout,
                        kind + " backend timed out after " +
                            std::to_string(config_.retry_count + 1) + " attempt(s)",
                        kind);
        }
        throw Error(ErrorCode::BackendUnavailable,
                    kind + " backend unavailable after " +
                        std::to_string(config_.retry_count + 1) + " attempt(s): " + last_problem,
                    kind);
    }

    [[noreturn]] void protocol_error(const std::string& what) const {
        const std::string kind(to_string(config_.kind));
        throw Error(ErrorCode::ProtocolError, kind + " backend: " + what, kind);
    }

    std::string string_field(const json& body, const char* key) const {
        const auto it = body.find(key);
        if (it == body.end() || !it->is_string()) {
            protocol_error(std::string("response lacks string field '") + key + "'");
        }
        return it->get<std::string>();
    }

    RasterImage image_field(const json& body, const char* key) const {
        try {
            return codec::decode_png(codec::base64_decode(string_field(body, key)));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ProtocolError) throw;
            protocol_error(std::string("field '") + key + "' is not a base64 PNG: " + e.what());
        }
    }

    ParseMap parse_map_field(const json& body, const char* key) const {
        try {
            return codec::decode_parse_map(codec::base64_decode(string_field(body, key)));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ProtocolError) throw;
            protocol_error(std::string("field '") + key + "' is not a label PNG: " + e.what());
        }
    }

    EmbeddingVector embedding_field(const json& body) const {
        const auto it = body.find("embedding");
        if (it == body.end() || !it->is_array() || it->empty()) {
            protocol_error("response lacks a non-empty 'embedding' array");
        }
        std::vector<double> raw;
        raw.reserve(it->size());
        for (const auto& v : *it) {
            if (!v.is_number()) protocol_error("embedding holds a non-number");
            raw.push_back(v.get<double>());
        }
        try {
            return normalize(std::span<const double>(raw));
        } catch (const Error&) {
            protocol_error("embedding is a zero vector");
        }
    }

    void require_size(const RasterImage& img, int w, int h) const {
        if (img.width() != w || img.height() != h) {
            protocol_error("returned raster is " + std::to_string(img.width()) + "x" +
                           std::to_string(img.height()) + ", expected " + std::to_string(w) +
                           "x" + std::to_string(h));
        }
    }

    BackendMode mode() const noexcept { return BackendMode::Remote; }

private:
    static BackendConfig validated(BackendConfig c) {
        c.validate();
        if (c.mode != BackendMode::Remote) {
            throw Error(ErrorCode::InvalidArgument, "remote client built from a mock config");
        }
        return c;
    }

    RemoteReply decode(const std::string& text) const {
        json body = json::parse(text, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            protocol_error("response is not a JSON object");
        }
        const auto model = body.find("model_id");
        const auto latency = body.find("latency_ms");
        if (model == body.end() || !model->is_string() || latency == body.end() ||
            !latency->is_number()) {
            protocol_error("response lacks model_id / latency_ms");
        }
        CallInfo call{config_.kind, BackendMode::Remote, model->get<std::string>(),
                      static_cast<std::int64_t>(latency->get<double>())};
        return {std::move(body), std::move(call)};
    }

    BackendConfig config_;
    Endpoint endpoint_;
    std::counting_semaphore<> slots_;
};

std::string png_b64(const RasterImage& img) { return codec::base64_encode(codec::encode_png(img)); }

class RemoteChat final : public ChatBackend {
public:
    explicit RemoteChat(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<std::string> complete(std::span<const ChatMessage> messages) override {
        require_user_last(messages);
        json msgs = json::array();
        for (const auto& m : messages) {
            msgs.push_back({{"role", m.role}, {"content", m.content}});
        }
        auto r = client_.post("/v1/chat", {{"messages", msgs}});
        return {client_.string_field(r.body, "text"), r.call};
    }

private:
    RemoteClient client_;
};

class RemoteEmbedding final : public EmbeddingBackend {
public:
    explicit RemoteEmbedding(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<EmbeddingVector> embed_text(std::string_view text) override {
        require_nonblank(text, "text to embed");
        auto r = client_.post("/v1/embed/text", {{"text", text}});
        return {client_.embedding_field(r.body), r.call};
    }

    BackendResult<EmbeddingVector> embed_image(const RasterImage& image) override {
        if (image.empty()) throw Error(ErrorCode::InvalidArgument, "image to embed is empty");
        auto r = client_.post("/v1/embed/image", {{"image_png_b64", png_b64(image)}});
        return {client_.embedding_field(r.body), r.call};
    }

private:
    RemoteClient client_;
};

class RemoteRefiner final : public RefineBackend {
public:
    explicit RemoteRefiner(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<std::string> refine(const RasterImage& image,
                                      std::string_view instruction) override {
        require_nonblank(instruction, "instruction");
        auto r = client_.post("/v1/refine",
                              {{"image_png_b64", png_b64(image)}, {"instruction", instruction}});
        return {client_.string_field(r.body, "text"), r.call};
    }

private:
    RemoteClient client_;
};

class RemoteSegmenter final : public SegmentBackend {
public:
    explicit RemoteSegmenter(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<BinaryMask> segment(const SegmentationQuery& query) override {
        require_nonblank(query.instruction, "segmentation instruction");
        auto r = client_.post("/v1/segment", {{"image_png_b64", png_b64(query.image)},
                                              {"instruction", query.instruction}});
        RasterImage soft = client_.image_field(r.body, "mask_png_b64");
        client_.require_size(soft, query.image.width(), query.image.height());
        if (soft.channels() != 1) {
            client_.protocol_error("mask must be a single-channel PNG");
        }
        BinaryMask mask = binarize(soft);
        if (mask.is_empty()) {
            throw Error(ErrorCode::NoRegionFound, "segmenter returned an empty mask",
                        std::string(to_string(BackendKind::Segment)));
        }
        return {std::move(mask), r.call};
    }

private:
    RemoteClient client_;
};

class RemoteHumanParser final : public HumanParserBackend {
public:
    explicit RemoteHumanParser(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<ParseMap> parse(const RasterImage& image) override {
        auto r = client_.post("/v1/parse", {{"image_png_b64", png_b64(image)}});
        ParseMap map = client_.parse_map_field(r.body, "parse_png_b64");
        if (map.width() != image.width() || map.height() != image.height()) {
            client_.protocol_error("parse map size differs from the image");
        }
        return {std::move(map), r.call};
    }

private:
    RemoteClient client_;
};

class RemotePose final : public PoseBackend {
public:
    explicit RemotePose(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<RasterImage> estimate(const RasterImage& image) override {
        auto r = client_.post("/v1/pose", {{"image_png_b64", png_b64(image)}});
        RasterImage pose = mock::to_rgb(client_.image_field(r.body, "image_png_b64"));
        client_.require_size(pose, image.width(), image.height());
        return {std::move(pose), r.call};
    }

private:
    RemoteClient client_;
};

class RemoteTryOn final : public TryOnBackend {
public:
    explicit RemoteTryOn(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<RasterImage> try_on(const RasterImage& masked_person, const RasterImage& garment,
                                      std::uint64_t seed) override {
        auto r = client_.post("/v1/tryon", {{"masked_person_png_b64", png_b64(masked_person)},
                                            {"garment_png_b64", png_b64(garment)},
                                            {"seed", seed}});
        RasterImage out = client_.image_field(r.body, "image_png_b64");
        client_.require_size(out, masked_person.width(), masked_person.height());
        if (out.channels() != masked_person.channels()) {
            out = mock::to_rgb(out);
        }
        return {std::move(out), r.call};
    }

private:
    RemoteClient client_;
};

class RemoteEditor final : public EditBackend {
public:
    explicit RemoteEditor(const BackendConfig& c) : client_(c) {}
    BackendMode mode() const noexcept override { return BackendMode::Remote; }

    BackendResult<RasterImage> edit(const EditRequest& request) override {
        request.validate();
        auto r = client_.post("/v1/edit", {{"mask_png_b64", png_b64(mask_to_image(request.mask))},
                                           {"masked_image_png_b64", png_b64(request.masked_image)},
                                           {"pose_png_b64", png_b64(request.pose_image)},
                                           {"guidance_prompt", request.guidance_prompt},
                                           {"seed", request.seed}});
        RasterImage out = client_.image_field(r.body, "image_png_b64");
        client_.require_size(out, request.masked_image.width(), request.masked_image.height());
        if (out.channels() != request.masked_image.channels()) {
            out = mock::to_rgb(out);
        }
        return {std::move(out), r.call};
    }

private:
    RemoteClient client_;
};

}  // namespace

std::shared_ptr<ChatBackend> make_remote_chat(const BackendConfig& c) {
    return std::make_shared<RemoteChat>(c);
}
std::shared_ptr<EmbeddingBackend> make_remote_embedding(const BackendConfig& c) {
    return std::make_shared<RemoteEmbedding>(c);
}
std::shared_ptr<RefineBackend> make_remote_refiner(const BackendConfig& c) {
    return std::make_shared<RemoteRefiner>(c);
}
std::shared_ptr<SegmentBackend> make_remote_segmenter(const BackendConfig& c) {
    return std::make_shared<RemoteSegmenter>(c);
}
std::shared_ptr<HumanParserBackend> make_remote_human_parser(const BackendConfig& c) {
    return std::make_shared<RemoteHumanParser>(c);
}
std::shared_ptr<PoseBackend> make_remote_pose(const BackendConfig& c) {
    return std::make_shared<RemotePose>(c);
}
std::shared_ptr<TryOnBackend> make_remote_try_on(const BackendConfig& c) {
    return std::make_shared<RemoteTryOn>(c);
}
std::shared_ptr<EditBackend> make_remote_editor(const BackendConfig& c) {
    return std::make_shared<RemoteEditor>(c);
}

BackendConfigs default_backend_configs() {
    BackendConfigs configs;
    for (BackendKind kind : kAllBackendKinds) {
        BackendConfig c;
        c.kind = kind;
        apply_env_overrides(c);
        configs[kind] = c;
    }
    return configs;
}

BackendSet make_backends(const BackendConfigs& configs, std::optional<ParseMap> fixture_parse) {
    BackendSet set = mock::make_mock_backends(std::move(fixture_parse));
    for (const auto& [kind, config] : configs) {
        config.validate();
        if (config.mode != BackendMode::Remote) continue;
        switch (kind) {
            case BackendKind::Chat: set.chat = make_remote_chat(config); break;
            case BackendKind::Embed: set.embed = make_remote_embedding(config); break;
            case BackendKind::Refine: set.refine = make_remote_refiner(config); break;
            case BackendKind::Segment: set.segment = make_remote_segmenter(config); break;
            case BackendKind::ParseHuman: set.parse_human = make_remote_human_parser(config); break;
            case BackendKind::Pose: set.pose = make_remote_pose(config); break;
            case BackendKind::TryOnImage: set.try_on = make_remote_try_on(config); break;
            case BackendKind::EditText: set.edit = make_remote_editor(config); break;
        }
    }
    return set;
}

}  // namespace talkfashion
