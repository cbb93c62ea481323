#pragma once

// REST surface over the pipeline. Endpoints:
//
//   POST /v1/sessions                      -> 201 {session_id}
//   POST /v1/sessions/{id}/messages        multipart: text, optional image, seed
//   GET  /v1/sessions/{id}/trace
//   GET  /v1/images/{id}                   PNG
//   GET  /v1/catalog/search?q=&k=
//   GET  /v1/catalog/garments/{id}/image   PNG
//   POST /admin/reload-catalog
//   POST /admin/tau                        {"tau": x}
//   GET  /ui/...                           static files from ui_dir
//
// Errors are JSON {error, message[, backend]} with 400, 404, 413, 422, 500
// or 503 (backend failure, `backend` names the kind).

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "talkfashion/pipeline.hpp"
#include "talkfashion/remote_backends.hpp"

namespace talkfashion {

inline constexpr std::size_t kMinUploadBytes = 1u << 20;

// Mock embeddings separate matches sharply; real text-image encoders score
// true matches far lower.
inline constexpr double kMockTau = 0.5;
inline constexpr double kRemoteTau = 0.25;

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<double> tau;  // unset: kMockTau or kRemoteTau by embed mode
    std::filesystem::path catalog_path;   // empty: start with an empty catalog
    std::filesystem::path template_path;  // empty: the bundled default template
    std::filesystem::path mock_parse_path;  // optional parse map for the mock parser
    std::filesystem::path ui_dir;
    std::size_t max_upload_bytes = 8u << 20;
    int max_in_flight = 8;
    int mask_dilation = 0;
    std::chrono::seconds session_ttl{24 * 3600};
    BackendConfigs backends = default_backend_configs();

    double effective_tau() const;

    // Throws InvalidArgument.
    void validate() const;

    // JSON config file; relative paths resolve against the file's directory.
    // Missing keys keep their defaults. TF_* environment variables override
    // the file. Throws InvalidArgument, IoError.
    static ServiceConfig load(const std::filesystem::path& path);
    static ServiceConfig from_json(std::string_view document,
                                   const std::filesystem::path& base_dir = {});
    void apply_env();
};

std::filesystem::path default_template_path();

class Service {
public:
    // Builds backends from the config.
    explicit Service(ServiceConfig config);
    // Uses the given backends (tests, embedding).
    Service(ServiceConfig config, BackendSet backends);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds host:port (port 0 picks a free one) and returns the bound port.
    // Throws IoError.
    int bind();
    // Blocks serving requests until stop().
    void serve();
    void stop();

    Pipeline& pipeline();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace talkfashion
