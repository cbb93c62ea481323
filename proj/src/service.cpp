#include "talkfashion/service.hpp"

#include <httplib.h>

#include <charconv>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "talkfashion/codec.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kMultipartSlack = 64 * 1024;
constexpr std::size_t kDefaultSearchK = 5;
constexpr std::size_t kMaxSearchK = 100;

[[noreturn]] void bad_config(const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "config: " + what);
}

template <typename T>
T parse_number(std::string_view s, const std::string& what) {
    T v{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        bad_config(what + " must be a number, got '" + std::string(s) + "'");
    }
    return v;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        bad_config("'" + key + "' has the wrong type");
    }
}

void read_backend(const json& j, BackendConfig& c) {
    const std::string kind(to_string(c.kind));
    if (!j.is_object()) bad_config("backends." + kind + " must be an object");
    for (const auto& [key, v] : j.items()) {
        const std::string name = "backends." + kind + "." + key;
        if (key == "mode") {
            const auto m = backend_mode_from_string(get_as<std::string>(v, name));
            if (!m) bad_config(name + " must be 'remote' or 'mock'");
            c.mode = *m;
        } else if (key == "url") {
            c.endpoint_url = get_as<std::string>(v, name);
        } else if (key == "timeout_ms") {
            c.timeout = std::chrono::milliseconds(get_as<std::int64_t>(v, name));
        } else if (key == "retry_count") {
            c.retry_count = get_as<int>(v, name);
        } else if (key == "max_in_flight") {
            c.max_in_flight = get_as<int>(v, name);
        } else {
            bad_config("unknown key " + name);
        }
    }
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::SessionNotFound: return 404;
        case ErrorCode::ImageDecodeError: return 422;
        case ErrorCode::BackendUnavailable:
        case ErrorCode::Timeout:
        case ErrorCode::ProtocolError: return 503;
        case ErrorCode::IoError:
        case ErrorCode::CorruptIndex:
        case ErrorCode::VersionMismatch:
        case ErrorCode::MissingImage:
        case ErrorCode::DimensionMismatch: return 500;
        default: return 400;
    }
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::string& backend = {}) {
    ordered_json body{{"error", code}, {"message", message}};
    if (!backend.empty()) body["backend"] = backend;
    send_json(res, status, body);
}

void send_error(httplib::Response& res, const Error& e) {
    const int status = http_status(e.code());
    send_error(res, status, to_string(e.code()), e.what(), status == 503 ? e.detail() : "");
}

std::string image_url(const std::string& id) { return "/v1/images/" + id; }

}  // namespace

fs::path default_template_path() {
    return fs::path(TF_DATA_DIR) / "templates" / "default.json";
}

double ServiceConfig::effective_tau() const {
    if (tau) return *tau;
    const auto it = backends.find(BackendKind::Embed);
    return it != backends.end() && it->second.mode == BackendMode::Remote ? kRemoteTau : kMockTau;
}

void ServiceConfig::validate() const {
    const double t = effective_tau();
    if (!(t >= 0.0 && t <= 1.0)) bad_config("tau must lie in [0, 1]");
    if (max_upload_bytes < kMinUploadBytes) bad_config("max_upload_bytes must be >= 1 MiB");
    if (port < 0 || port > 65535) bad_config("port must lie in [0, 65535]");
    if (max_in_flight < 1) bad_config("max_in_flight must be >= 1");
    if (mask_dilation < 0) bad_config("mask_dilation must be >= 0");
    if (session_ttl.count() < 1) bad_config("session_ttl_seconds must be >= 1");
    for (const auto& [kind, c] : backends) c.validate();
}

ServiceConfig ServiceConfig::from_json(std::string_view document, const fs::path& base_dir) {
    const json doc = json::parse(document, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) bad_config("not a JSON object");
    ServiceConfig c;
    for (const auto& [key, v] : doc.items()) {
        if (key == "host") c.host = get_as<std::string>(v, key);
        else if (key == "port") c.port = get_as<int>(v, key);
        else if (key == "tau") c.tau = get_as<double>(v, key);
        else if (key == "catalog_path") c.catalog_path = resolve(base_dir, get_as<std::string>(v, key));
        else if (key == "template_path") c.template_path = resolve(base_dir, get_as<std::string>(v, key));
        else if (key == "mock_parse_path") c.mock_parse_path = resolve(base_dir, get_as<std::string>(v, key));
        else if (key == "ui_dir") c.ui_dir = resolve(base_dir, get_as<std::string>(v, key));
        else if (key == "max_upload_bytes") c.max_upload_bytes = get_as<std::size_t>(v, key);
        else if (key == "max_in_flight") c.max_in_flight = get_as<int>(v, key);
        else if (key == "mask_dilation") c.mask_dilation = get_as<int>(v, key);
        else if (key == "session_ttl_seconds") c.session_ttl = std::chrono::seconds(get_as<std::int64_t>(v, key));
        else if (key == "backends") {
            if (!v.is_object()) bad_config("backends must be an object");
            for (const auto& [kind_name, bj] : v.items()) {
                const auto kind = backend_kind_from_string(kind_name);
                if (!kind) bad_config("unknown backend kind '" + kind_name + "'");
                read_backend(bj, c.backends[*kind]);
            }
        } else {
            bad_config("unknown key '" + key + "'");
        }
    }
    return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path) {
    const auto bytes = codec::read_file(path);
    ServiceConfig c = from_json(std::string(bytes.begin(), bytes.end()), path.parent_path());
    c.apply_env();
    c.validate();
    return c;
}

void ServiceConfig::apply_env() {
    const auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    if (auto v = env("TF_HOST")) host = *v;
    if (auto v = env("TF_PORT")) port = parse_number<int>(*v, "TF_PORT");
    if (auto v = env("TF_TAU")) tau = parse_number<double>(*v, "TF_TAU");
    if (auto v = env("TF_CATALOG_PATH")) catalog_path = *v;
    if (auto v = env("TF_TEMPLATE_PATH")) template_path = *v;
    if (auto v = env("TF_MOCK_PARSE_PATH")) mock_parse_path = *v;
    if (auto v = env("TF_UI_DIR")) ui_dir = *v;
    if (auto v = env("TF_MAX_UPLOAD_BYTES")) {
        max_upload_bytes = parse_number<std::size_t>(*v, "TF_MAX_UPLOAD_BYTES");
    }
    if (auto v = env("TF_MAX_IN_FLIGHT")) max_in_flight = parse_number<int>(*v, "TF_MAX_IN_FLIGHT");
    if (auto v = env("TF_MASK_DILATION")) mask_dilation = parse_number<int>(*v, "TF_MASK_DILATION");
    if (auto v = env("TF_SESSION_TTL_SECONDS")) {
        session_ttl = std::chrono::seconds(parse_number<std::int64_t>(*v, "TF_SESSION_TTL_SECONDS"));
    }
    for (auto& [kind, c] : backends) apply_env_overrides(c);
}

struct Service::Impl {
    ServiceConfig config;
    std::unique_ptr<Pipeline> pipeline;
    httplib::Server server;
    std::atomic<std::uint64_t> generation{1};
    std::mutex reload_mu;

    std::mutex gc_mu;
    std::condition_variable gc_cv;
    bool stopping = false;
    std::thread gc_thread;

    Impl(ServiceConfig cfg, BackendSet backends) : config(std::move(cfg)) {
        config.validate();
        const fs::path tpath = config.template_path.empty() ? default_template_path()
                                                            : config.template_path;
        auto tmpl = PromptTemplate::load(tpath);
        std::shared_ptr<const CatalogSnapshot> snapshot;
        if (!config.catalog_path.empty()) snapshot = load_snapshot(config.catalog_path, 1);
        PipelineConfig pc;
        pc.tau = config.effective_tau();
        pc.mask_dilation = config.mask_dilation;
        pc.max_in_flight = config.max_in_flight;
        pipeline = std::make_unique<Pipeline>(std::move(backends), std::move(tmpl),
                                              std::move(snapshot), pc);
        routes();
    }

    ~Impl() { shutdown(); }

    void shutdown() {
        server.stop();
        {
            std::lock_guard lock(gc_mu);
            stopping = true;
        }
        gc_cv.notify_all();
        if (gc_thread.joinable()) gc_thread.join();
    }

    void gc_loop() {
        const auto period = std::min<std::chrono::seconds>(
            std::chrono::seconds(60), std::max<std::chrono::seconds>(std::chrono::seconds(1),
                                                                     config.session_ttl / 10));
        std::unique_lock lock(gc_mu);
        while (!gc_cv.wait_for(lock, period, [&] { return stopping; })) {
            pipeline->collect_expired(std::chrono::system_clock::now(), config.session_ttl);
        }
    }

    // Wraps a handler so library errors become JSON error responses.
    template <typename F>
    auto guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_error(res, e);
            }
        };
    }

    void routes() {
        const int threads = config.max_in_flight;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        server.set_payload_max_length(config.max_upload_bytes + kMultipartSlack);
        server.set_exception_handler(
            [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
                std::string what = "unexpected failure";
                try {
                    std::rethrow_exception(ep);
                } catch (const std::exception& e) {
                    what = e.what();
                } catch (...) {
                }
                send_error(res, 500, "Internal", what);
            });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 413) {
                send_error(res, 413, "PayloadTooLarge", "request body exceeds the upload limit");
            } else if (res.status == 404) {
                send_error(res, 404, "NotFound", "no such resource");
            }
        });

        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok\n", "text/plain");
        });

        server.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> requested;
            if (!text::trim(req.body).empty()) {
                const json body = json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.is_object()) {
                    throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
                }
                if (body.contains("session_id")) {
                    if (!body["session_id"].is_string()) {
                        throw Error(ErrorCode::InvalidArgument, "session_id must be a string");
                    }
                    requested = body["session_id"].get<std::string>();
                }
            }
            const std::string id = pipeline->create_session(requested);
            send_json(res, 201, {{"session_id", id}});
        }));

        server.Post("/v1/sessions/:id/messages",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        post_message(req, res);
                    }));

        server.Get("/v1/sessions/:id/trace",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string& id = req.path_params.at("id");
                       const auto steps = pipeline->trace(id);
                       ordered_json body;
                       body["session_id"] = id;
                       body["steps"] = to_json(steps);
                       send_json(res, 200, body);
                   }));

        server.Get("/v1/images/:id", [this](const httplib::Request& req, httplib::Response& res) {
            const auto png = pipeline->images().get(req.path_params.at("id"));
            if (!png) {
                send_error(res, 404, "ImageNotFound", "no image " + req.path_params.at("id"));
                return;
            }
            res.set_content(std::string(png->begin(), png->end()), "image/png");
        });

        server.Get("/v1/catalog/search", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string q = req.get_param_value("q");
            if (text::trim(q).empty()) {
                throw Error(ErrorCode::InvalidArgument, "query parameter q is required");
            }
            std::size_t k = kDefaultSearchK;
            if (req.has_param("k")) {
                const std::string ks = req.get_param_value("k");
                std::size_t v = 0;
                const auto [end, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), v);
                if (ec != std::errc() || end != ks.data() + ks.size() || v < 1 || v > kMaxSearchK) {
                    throw Error(ErrorCode::InvalidArgument, "k must be an integer in [1, 100]");
                }
                k = v;
            }
            const auto snapshot = pipeline->catalog();
            ordered_json body;
            body["query"] = q;
            body["k"] = k;
            body["catalog_generation"] = snapshot->generation;
            body["results"] = ordered_json::array();
            if (!snapshot->catalog.records.empty()) {
                for (const auto& hit : search(snapshot->catalog, q, k, *pipeline->backends().embed)) {
                    const GarmentRecord* r = snapshot->find(hit.garment_id);
                    body["results"].push_back(
                        {{"garment_id", hit.garment_id},
                         {"category", to_string(r->category)},
                         {"caption", r->caption},
                         {"score", hit.score.value},
                         {"image_url", "/v1/catalog/garments/" + hit.garment_id + "/image"}});
                }
            }
            send_json(res, 200, body);
        }));

        server.Get("/v1/catalog/garments/:id/image",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto snapshot = pipeline->catalog();
                       const GarmentRecord* r = snapshot->find(req.path_params.at("id"));
                       if (!r) {
                           send_error(res, 404, "GarmentNotFound",
                                      "no garment " + req.path_params.at("id"));
                           return;
                       }
                       const auto png = codec::read_file(snapshot->root / r->image_path);
                       res.set_content(std::string(png.begin(), png.end()), "image/png");
                   }));

        server.Post("/admin/reload-catalog",
                    guarded([this](const httplib::Request&, httplib::Response& res) {
                        if (config.catalog_path.empty()) {
                            throw Error(ErrorCode::InvalidArgument, "no catalog_path configured");
                        }
                        std::lock_guard lock(reload_mu);
                        const auto next = generation.load() + 1;
                        auto snapshot = load_snapshot(config.catalog_path, next);
                        const auto count = snapshot->catalog.records.size();
                        const int version = snapshot->catalog.catalog_version;
                        pipeline->set_catalog(std::move(snapshot));
                        generation.store(next);
                        send_json(res, 200,
                                  {{"catalog_version", version},
                                   {"generation", next},
                                   {"record_count", count}});
                    }));

        server.Post("/admin/tau", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("tau") ||
                !body["tau"].is_number()) {
                throw Error(ErrorCode::InvalidArgument, "body must be {\"tau\": <number>}");
            }
            pipeline->set_tau(body["tau"].get<double>());
            send_json(res, 200, {{"tau", pipeline->tau()}});
        }));

        if (!config.ui_dir.empty() && fs::is_directory(config.ui_dir)) {
            server.set_mount_point("/ui", config.ui_dir.string());
        }
    }

    void post_message(const httplib::Request& req, httplib::Response& res) {
        const std::string& id = req.path_params.at("id");
        if (!pipeline->has_session(id)) {
            throw Error(ErrorCode::SessionNotFound, "no session " + id, id);
        }
        if (!req.is_multipart_form_data()) {
            throw Error(ErrorCode::InvalidArgument, "expected multipart/form-data");
        }
        if (!req.has_file("text")) {
            throw Error(ErrorCode::InvalidArgument, "missing 'text' part");
        }
        const std::string user_text = req.get_file_value("text").content;
        if (text::trim(user_text).empty()) {
            throw Error(ErrorCode::EmptyInstruction, "'text' must not be blank");
        }
        std::optional<RasterImage> person;
        if (req.has_file("image")) {
            const auto& part = req.get_file_value("image");
            if (part.content.size() > config.max_upload_bytes) {
                send_error(res, 413, "PayloadTooLarge",
                           "image exceeds " + std::to_string(config.max_upload_bytes) + " bytes");
                return;
            }
            person = codec::decode_png(codec::as_bytes(part.content));
        }
        std::optional<std::uint64_t> seed;
        if (req.has_file("seed")) {
            const std::string s(text::trim(req.get_file_value("seed").content));
            std::uint64_t v = 0;
            const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || end != s.data() + s.size()) {
                throw Error(ErrorCode::InvalidArgument, "seed must be an unsigned integer");
            }
            seed = v;
        }

        const MessageResult result = pipeline->handle_message(id, user_text, std::move(person), seed);
        ordered_json body;
        body["reply"] = result.reply;
        if (result.step.output_image_id) {
            body["image_id"] = *result.step.output_image_id;
            body["image_url"] = image_url(*result.step.output_image_id);
        } else {
            body["image_id"] = nullptr;
            body["image_url"] = nullptr;
        }
        body["trace"] = to_json(result.step);
        send_json(res, 200, body);
    }
};

namespace {

BackendSet backends_for(const ServiceConfig& config) {
    std::optional<ParseMap> fixture;
    if (!config.mock_parse_path.empty()) {
        fixture = codec::decode_parse_map(codec::read_file(config.mock_parse_path));
    }
    return make_backends(config.backends, std::move(fixture));
}

}  // namespace

Service::Service(ServiceConfig config) {
    config.validate();
    BackendSet backends = backends_for(config);
    impl_ = std::make_unique<Impl>(std::move(config), std::move(backends));
}

Service::Service(ServiceConfig config, BackendSet backends)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(backends))) {}

Service::~Service() = default;

int Service::bind() {
    int port = impl_->config.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->config.host);
        if (port < 0) port = 0;
    } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
        port = 0;
    }
    if (port == 0) {
        throw Error(ErrorCode::IoError, "cannot bind " + impl_->config.host + ":" +
                                            std::to_string(impl_->config.port));
    }
    if (!impl_->gc_thread.joinable()) {
        impl_->gc_thread = std::thread([this] { impl_->gc_loop(); });
    }
    return port;
}

void Service::serve() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->shutdown(); }

Pipeline& Service::pipeline() { return *impl_->pipeline; }

}  // namespace talkfashion
