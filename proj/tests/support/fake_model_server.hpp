#pragma once

// In-process HTTP model server that answers every backend endpoint by
// running the corresponding mock. Faults can be injected per path.

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "talkfashion/codec.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/mock_backends.hpp"

namespace tfx {

using namespace talkfashion;

class FakeModelServer {
public:
    enum class Fault { None, Http500, Http400, BadJson, MissingMeta, Hang, WrongSize, EmptyMask };

    explicit FakeModelServer(std::optional<ParseMap> fixture = std::nullopt)
        : mocks_(mock::make_mock_backends(std::move(fixture))) {
        using nlohmann::json;
        route("/v1/chat", [this](const json& in) {
            std::vector<ChatMessage> msgs;
            for (const auto& m : in.at("messages")) {
                msgs.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
            }
            return json{{"text", mocks_.chat->complete(msgs).value}};
        });
        route("/v1/embed/text", [this](const json& in) {
            return json{{"embedding", floats(mocks_.embed->embed_text(in.at("text").get<std::string>()).value)}};
        });
        route("/v1/embed/image", [this](const json& in) {
            return json{{"embedding", floats(mocks_.embed->embed_image(image(in, "image_png_b64")).value)}};
        });
        route("/v1/refine", [this](const json& in) {
            return json{{"text", mocks_.refine->refine(image(in, "image_png_b64"),
                                                        in.at("instruction").get<std::string>()).value}};
        });
        route("/v1/segment", [this](const json& in) {
            const auto img = image(in, "image_png_b64");
            const json empty{{"mask_png_b64", b64(RasterImage(img.width(), img.height(), 1, 0))}};
            if (fault("/v1/segment") == Fault::EmptyMask) return empty;
            try {
                const auto m = mocks_.segment->segment({img, in.at("instruction").get<std::string>()}).value;
                return json{{"mask_png_b64", b64(mask_to_image(m))}};
            } catch (const Error&) {
                return empty;  // the wire form of "no region"
            }
        });
        route("/v1/parse", [this](const json& in) {
            const auto p = mocks_.parse_human->parse(image(in, "image_png_b64")).value;
            return json{{"parse_png_b64", codec::base64_encode(codec::encode_parse_map(p))}};
        });
        route("/v1/pose", [this](const json& in) {
            return json{{"image_png_b64", b64(mocks_.pose->estimate(image(in, "image_png_b64")).value)}};
        });
        route("/v1/tryon", [this](const json& in) {
            auto out = mocks_.try_on->try_on(image(in, "masked_person_png_b64"), image(in, "garment_png_b64"),
                                             in.at("seed").get<std::uint64_t>()).value;
            return json{{"image_png_b64", b64(out)}};
        });
        route("/v1/edit", [this](const json& in) {
            EditRequest req{binarize(image(in, "mask_png_b64")), image(in, "masked_image_png_b64"),
                            image(in, "pose_png_b64"), in.at("guidance_prompt").get<std::string>(),
                            in.at("seed").get<std::uint64_t>()};
            return json{{"image_png_b64", b64(mocks_.edit->edit(req).value)}};
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeModelServer() {
        hang_release_ = true;
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

    // `times` < 0: fault forever.
    void inject(const std::string& path, Fault f, int times = -1) {
        std::lock_guard lock(mu_);
        faults_[path] = {f, times};
    }
    int hits(const std::string& path) const {
        std::lock_guard lock(mu_);
        const auto it = hits_.find(path);
        return it == hits_.end() ? 0 : it->second;
    }

private:
    struct FaultState {
        Fault fault = Fault::None;
        int remaining = 0;
    };

    static std::vector<float> floats(const EmbeddingVector& v) {
        return {v.values().begin(), v.values().end()};
    }
    static std::string b64(const RasterImage& img) { return codec::base64_encode(codec::encode_png(img)); }
    static RasterImage image(const nlohmann::json& in, const char* key) {
        return codec::decode_png(codec::base64_decode(in.at(key).get<std::string>()));
    }

    // Current fault for `path`, consuming one use.
    Fault take_fault(const std::string& path) {
        std::lock_guard lock(mu_);
        ++hits_[path];
        auto it = faults_.find(path);
        if (it == faults_.end() || it->second.fault == Fault::None) return Fault::None;
        if (it->second.remaining == 0) return Fault::None;
        if (it->second.remaining > 0) --it->second.remaining;
        return it->second.fault;
    }
    Fault fault(const std::string& path) const {
        std::lock_guard lock(mu_);
        const auto it = faults_.find(path);
        return it == faults_.end() ? Fault::None : it->second.fault;
    }

    template <typename F>
    void route(const std::string& path, F handler) {
        server_.Post(path, [this, path, handler](const httplib::Request& req, httplib::Response& res) {
            const Fault f = take_fault(path);
            switch (f) {
                case Fault::Http500: res.status = 500; return;
                case Fault::Http400: res.status = 400; res.set_content("{}", "application/json"); return;
                case Fault::BadJson: res.set_content("{not json", "application/json"); return;
                case Fault::Hang:
                    for (int i = 0; i < 300 && !hang_release_; ++i) {
                        std::this_thread::sleep_for(std::chrono::milliseconds(10));
                    }
                    return;
                default: break;
            }
            auto out = handler(nlohmann::json::parse(req.body));
            if (f == Fault::WrongSize && out.contains("image_png_b64")) {
                out["image_png_b64"] = b64(RasterImage(3, 3, 3, 0));
            }
            if (f != Fault::MissingMeta) {
                out["model_id"] = "fake-" + path;
                out["latency_ms"] = 12;
            }
            res.set_content(out.dump(), "application/json");
        });
    }

    BackendSet mocks_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<bool> hang_release_{false};
    mutable std::mutex mu_;
    std::map<std::string, FaultState> faults_;
    std::map<std::string, int> hits_;
};

}  // namespace tfx
