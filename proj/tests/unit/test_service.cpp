#include <gtest/gtest.h>
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "talkfashion/error.hpp"
#include "talkfashion/service.hpp"
#include "test_support.hpp"

using namespace talkfashion;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ServiceConfig base_config(const fs::path& catalog) {
    ServiceConfig c;
    c.port = 0;
    c.catalog_path = catalog;
    c.mock_parse_path = tfx::fixtures_dir() / "person_parse.png";
    c.max_upload_bytes = kMinUploadBytes;
    return c;
}

// Runs a Service on an ephemeral port for the lifetime of the object.
class Running {
public:
    explicit Running(ServiceConfig c) : service_(std::make_unique<Service>(std::move(c))) { start(); }
    Running(ServiceConfig c, BackendSet b) : service_(std::make_unique<Service>(std::move(c), std::move(b))) {
        start();
    }
    ~Running() {
        service_->stop();
        thread_.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(std::chrono::seconds(30));
        return c;
    }
    Service& service() { return *service_; }

private:
    void start() {
        port_ = service_->bind();
        thread_ = std::thread([this] { service_->serve(); });
    }
    std::unique_ptr<Service> service_;
    std::thread thread_;
    int port_ = 0;
};

std::string person_png() {
    const auto b = codec::read_file(tfx::fixtures_dir() / "person.png");
    return {b.begin(), b.end()};
}

httplib::MultipartFormDataItems message(const std::string& text, const std::string& image = {}) {
    httplib::MultipartFormDataItems items{{"text", text, "", ""}};
    if (!image.empty()) items.push_back({"image", image, "person.png", "image/png"});
    return items;
}

json body(const httplib::Result& r) { return json::parse(r->body); }

std::string new_session(httplib::Client& c, const std::string& id = {}) {
    auto r = c.Post("/v1/sessions", id.empty() ? "" : json{{"session_id", id}}.dump(), "application/json");
    EXPECT_EQ(r->status, 201);
    return body(r)["session_id"];
}

void copy_fixture_catalog(const fs::path& dest) {
    fs::copy(tfx::fixtures_dir() / "catalog", dest / "catalog", fs::copy_options::recursive);
    fs::copy(tfx::fixtures_dir() / "garments", dest / "garments", fs::copy_options::recursive);
}

}  // namespace

class ServiceTest : public ::testing::Test {
protected:
    tfx::TempDir tmp;
    std::unique_ptr<Running> server;
    void SetUp() override {
        copy_fixture_catalog(tmp.path());
        fs::create_directories(tmp / "ui");
        std::ofstream(tmp / "ui" / "index.html") << "<!doctype html><title>TalkFashion</title>";
        auto c = base_config(tmp / "catalog");
        c.ui_dir = tmp / "ui";
        server = std::make_unique<Running>(c);
    }
};

TEST_F(ServiceTest, SessionMessageTraceAndImage) {
    auto c = server->client();
    const auto id = new_session(c, "web-1");
    EXPECT_EQ(id, "web-1");

    auto r = c.Post("/v1/sessions/web-1/messages", message("change into the red floral top", person_png()));
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << r->body;
    const auto j = body(r);
    EXPECT_EQ(j["reply"], "Sure! Trying on the red floral top for you.");
    EXPECT_EQ(j["trace"]["route"], "image_based");
    EXPECT_EQ(j["trace"]["matched_garment_id"], "red_floral_top");
    const std::string url = j["image_url"];
    EXPECT_EQ(url, "/v1/images/" + j["image_id"].get<std::string>());

    auto img = c.Get(url);
    ASSERT_EQ(img->status, 200);
    EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
    const auto decoded = codec::decode_png(codec::as_bytes(img->body));
    EXPECT_EQ(decoded.width(), tfx::fixture_person().width());

    r = c.Post("/v1/sessions/web-1/messages", message("shorten the sleeves"));
    EXPECT_EQ(body(r)["trace"]["input_image_id"], j["image_id"]);

    auto t = c.Get("/v1/sessions/web-1/trace");
    ASSERT_EQ(t->status, 200);
    const auto tj = body(t);
    EXPECT_EQ(tj["session_id"], "web-1");
    ASSERT_EQ(tj["steps"].size(), 2u);
    EXPECT_EQ(tj["steps"][1]["step"], 1);
    EXPECT_EQ(tj["steps"][1]["invocation"]["function"], "localized_editing");
}

TEST_F(ServiceTest, RefusalHasNoImage) {
    auto c = server->client();
    const auto id = new_session(c);
    auto r = c.Post("/v1/sessions/" + id + "/messages", message("what's the weather"));
    ASSERT_EQ(r->status, 200);
    EXPECT_TRUE(body(r)["image_id"].is_null());
    EXPECT_EQ(body(r)["trace"]["outcome"], "refused_not_try_on");
}

TEST_F(ServiceTest, NotFound) {
    auto c = server->client();
    auto r = c.Post("/v1/sessions/ghost/messages", message("hi"));
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(body(r)["error"], "SessionNotFound");
    EXPECT_EQ(c.Get("/v1/sessions/ghost/trace")->status, 404);
    r = c.Get("/v1/images/deadbeef");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(body(r)["error"], "ImageNotFound");
    EXPECT_EQ(c.Get("/v1/catalog/garments/nope/image")->status, 404);
    r = c.Get("/no/such/route");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(body(r)["error"], "NotFound");
}

TEST_F(ServiceTest, BadRequests) {
    auto c = server->client();
    const auto id = new_session(c);
    const std::string path = "/v1/sessions/" + id + "/messages";
    EXPECT_EQ(c.Post(path, "{\"text\":\"hi\"}", "application/json")->status, 400);
    EXPECT_EQ(c.Post(path, httplib::MultipartFormDataItems{{"image", person_png(), "p.png", "image/png"}})->status,
              400);
    auto r = c.Post(path, message("   "));
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body(r)["error"], "EmptyInstruction");
    auto items = message("shorten the sleeves", person_png());
    items.push_back({"seed", "12x", "", ""});
    EXPECT_EQ(c.Post(path, items)->status, 400);
    r = c.Post(path, message("change into the red floral top"));
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body(r)["error"], "NoPersonImage");

    EXPECT_EQ(c.Post("/v1/sessions", "[1]", "application/json")->status, 400);
    EXPECT_EQ(c.Post("/v1/sessions", "{\"session_id\":\"a b\"}", "application/json")->status, 400);
    EXPECT_EQ(c.Post("/v1/sessions", json{{"session_id", id}}.dump(), "application/json")->status, 400);
}

TEST_F(ServiceTest, UndecodableImageIs422) {
    auto c = server->client();
    const auto id = new_session(c);
    auto r = c.Post("/v1/sessions/" + id + "/messages", message("shorten the sleeves", "not a png at all"));
    EXPECT_EQ(r->status, 422);
    EXPECT_EQ(body(r)["error"], "ImageDecodeError");
}

TEST_F(ServiceTest, OversizedImageIs413) {
    auto c = server->client();
    const auto id = new_session(c);
    std::mt19937_64 rng(1);
    // Noise does not compress: just over the 1 MiB limit.
    const auto png = codec::encode_png(tfx::random_image(rng, 600, 600, 3));
    ASSERT_GT(png.size(), kMinUploadBytes);
    auto r = c.Post("/v1/sessions/" + id + "/messages",
                    message("shorten the sleeves", std::string(png.begin(), png.end())));
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 413);
    EXPECT_EQ(body(r)["error"], "PayloadTooLarge");
}

TEST_F(ServiceTest, CatalogSearch) {
    auto c = server->client();
    auto r = c.Get("/v1/catalog/search?q=white%20cotton%20shirt&k=3");
    ASSERT_EQ(r->status, 200);
    const auto j = body(r);
    EXPECT_EQ(j["k"], 3);
    EXPECT_EQ(j["catalog_generation"], 1);
    ASSERT_EQ(j["results"].size(), 3u);
    EXPECT_EQ(j["results"][0]["garment_id"], "white_cotton_shirt");
    EXPECT_GE(j["results"][0]["score"].get<double>(), j["results"][1]["score"].get<double>());
    auto img = c.Get(j["results"][0]["image_url"].get<std::string>());
    EXPECT_EQ(img->status, 200);
    EXPECT_EQ(body(c.Get("/v1/catalog/search?q=dress"))["results"].size(), 5u);

    EXPECT_EQ(c.Get("/v1/catalog/search")->status, 400);
    EXPECT_EQ(c.Get("/v1/catalog/search?q=top&k=0")->status, 400);
    EXPECT_EQ(c.Get("/v1/catalog/search?q=top&k=101")->status, 400);
    EXPECT_EQ(c.Get("/v1/catalog/search?q=top&k=two")->status, 400);
}

TEST_F(ServiceTest, TauCanBeRaisedAtRuntime) {
    auto c = server->client();
    const auto id = new_session(c);
    auto r = c.Post("/v1/sessions/" + id + "/messages", message("red shirt", person_png()));
    EXPECT_EQ(body(r)["trace"]["route"], "image_based");

    r = c.Post("/admin/tau", "{\"tau\": 0.9}", "application/json");
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["tau"], 0.9);
    r = c.Post("/v1/sessions/" + id + "/messages", message("red shirt"));
    EXPECT_EQ(body(r)["trace"]["route"], "text_based");
    EXPECT_EQ(body(r)["trace"]["tau"], 0.9);

    EXPECT_EQ(c.Post("/admin/tau", "{\"tau\": 1.5}", "application/json")->status, 400);
    EXPECT_EQ(c.Post("/admin/tau", "{\"tau\": \"high\"}", "application/json")->status, 400);
    EXPECT_EQ(c.Post("/admin/tau", "nope", "application/json")->status, 400);
}

TEST_F(ServiceTest, ReloadSwapsTheCatalog) {
    auto c = server->client();
    auto r = c.Post("/admin/reload-catalog");
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["generation"], 2);
    EXPECT_EQ(body(r)["record_count"], 8);
    EXPECT_EQ(body(r)["catalog_version"], 1);

    // A corrupt catalog on disk is refused and the old one keeps serving.
    {
        std::fstream f(tmp / "catalog" / "catalog.vec", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        f.put('\x7f');
    }
    r = c.Post("/admin/reload-catalog");
    EXPECT_EQ(r->status, 500);
    EXPECT_EQ(body(r)["error"], "CorruptIndex");
    r = c.Get("/v1/catalog/search?q=red%20floral%20top&k=1");
    EXPECT_EQ(body(r)["catalog_generation"], 2);
    EXPECT_EQ(body(r)["results"][0]["garment_id"], "red_floral_top");
}

TEST_F(ServiceTest, StaticUi) {
    auto c = server->client();
    auto r = c.Get("/ui/index.html");
    ASSERT_EQ(r->status, 200);
    EXPECT_NE(r->body.find("TalkFashion"), std::string::npos);
    EXPECT_EQ(c.Get("/healthz")->status, 200);
}

TEST(ServiceBackendFailure, Is503WithKind) {
    auto backends = tfx::fixture_mocks();
    backends.edit = std::make_shared<tfx::DownEditor>();
    Running server(base_config({}), backends);
    auto c = server.client();
    const auto id = new_session(c);
    auto r = c.Post("/v1/sessions/" + id + "/messages", message("shorten the sleeves", person_png()));
    ASSERT_EQ(r->status, 503);
    EXPECT_EQ(body(r)["error"], "BackendUnavailable");
    EXPECT_EQ(body(r)["backend"], "edit_text");
    // The failed step is still in the trace.
    const auto t = body(c.Get("/v1/sessions/" + id + "/trace"));
    EXPECT_EQ(t["steps"][0]["error_code"], "BackendUnavailable");
}

TEST(ServiceEmptyCatalog, SearchIsEmptyAndReloadNeedsAPath) {
    Running server(base_config({}));
    auto c = server.client();
    auto r = c.Get("/v1/catalog/search?q=red");
    ASSERT_EQ(r->status, 200);
    EXPECT_TRUE(body(r)["results"].empty());
    EXPECT_EQ(c.Post("/admin/reload-catalog")->status, 400);
}

TEST(ServiceConfigTest, FromJson) {
    const auto c = ServiceConfig::from_json(R"({
        "host": "0.0.0.0", "port": 9090, "tau": 0.4, "catalog_path": "cat",
        "ui_dir": "/srv/ui", "max_upload_bytes": 2097152, "session_ttl_seconds": 60,
        "backends": {"segment": {"mode": "remote", "url": "http://seg:9000", "timeout_ms": 1500,
                                 "retry_count": 3, "max_in_flight": 2}}
    })", "/etc/tf");
    EXPECT_EQ(c.host, "0.0.0.0");
    EXPECT_EQ(c.port, 9090);
    EXPECT_EQ(c.effective_tau(), 0.4);
    EXPECT_EQ(c.catalog_path, fs::path("/etc/tf/cat"));
    EXPECT_EQ(c.ui_dir, fs::path("/srv/ui"));
    EXPECT_EQ(c.session_ttl, std::chrono::seconds(60));
    const auto& seg = c.backends.at(BackendKind::Segment);
    EXPECT_EQ(seg.mode, BackendMode::Remote);
    EXPECT_EQ(seg.timeout, std::chrono::milliseconds(1500));
    EXPECT_EQ(seg.retry_count, 3);
    EXPECT_NO_THROW(c.validate());

    EXPECT_THROW(ServiceConfig::from_json(R"({"colour": 1})"), Error);
    EXPECT_THROW(ServiceConfig::from_json(R"({"port": "x"})"), Error);
    EXPECT_THROW(ServiceConfig::from_json(R"({"backends": {"video": {}}})"), Error);
    EXPECT_THROW(ServiceConfig::from_json("[]"), Error);
}

TEST(ServiceConfigTest, TauDefaultsFollowTheEmbedder) {
    ServiceConfig c;
    EXPECT_EQ(c.effective_tau(), kMockTau);
    c.backends[BackendKind::Embed].mode = BackendMode::Remote;
    c.backends[BackendKind::Embed].endpoint_url = "http://embed:9000";
    EXPECT_EQ(c.effective_tau(), kRemoteTau);
    c.tau = 0.7;
    EXPECT_EQ(c.effective_tau(), 0.7);
}

TEST(ServiceConfigTest, Validation) {
    ServiceConfig c;
    c.tau = 1.2;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.max_upload_bytes = 1000;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.max_in_flight = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(ServiceConfigTest, EnvironmentOverridesFile) {
    tfx::TempDir tmp;
    std::ofstream(tmp / "svc.json") << R"({"port": 9000, "tau": 0.3, "catalog_path": "cat"})";
    setenv("TF_PORT", "9100", 1);
    setenv("TF_TAU", "0.6", 1);
    const auto c = ServiceConfig::load(tmp / "svc.json");
    setenv("TF_TAU", "lots", 1);
    EXPECT_THROW(ServiceConfig::load(tmp / "svc.json"), Error);
    unsetenv("TF_PORT");
    unsetenv("TF_TAU");
    EXPECT_EQ(c.port, 9100);
    EXPECT_EQ(c.effective_tau(), 0.6);
    EXPECT_EQ(c.catalog_path, tmp.path() / "cat");
    EXPECT_THROW(ServiceConfig::load(tmp / "missing.json"), Error);
}
