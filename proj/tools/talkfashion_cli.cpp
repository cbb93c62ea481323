// talkfashion: serve | ingest | match | edit | eval
//
// Exit codes: 0 ok, 2 usage or invalid input, 3 request produced no edit,
// 4 backend failure, 5 storage failure, 1 anything else. Failures print one
// JSON line {"error", "message"[, "detail"]} on stderr.

#include <CLI11.hpp>

#include <csignal>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <thread>

#include "talkfashion/catalog_store.hpp"
#include "talkfashion/codec.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/mock_backends.hpp"
#include "talkfashion/pipeline.hpp"
#include "talkfashion/remote_backends.hpp"
#include "talkfashion/service.hpp"

namespace fs = std::filesystem;
using namespace talkfashion;
using ordered_json = nlohmann::ordered_json;

namespace {

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::EmptyInstruction:
        case ErrorCode::ImageDecodeError:
        case ErrorCode::CaptionParseError:
        case ErrorCode::InvalidTemplate:
        case ErrorCode::NoPersonImage: return 2;
        case ErrorCode::NotATryOnRequest:
        case ErrorCode::RegionNotFound:
        case ErrorCode::ParseFailed: return 3;
        case ErrorCode::BackendUnavailable:
        case ErrorCode::Timeout:
        case ErrorCode::ProtocolError: return 4;
        case ErrorCode::IoError:
        case ErrorCode::CorruptIndex:
        case ErrorCode::VersionMismatch:
        case ErrorCode::MissingImage: return 5;
        default: return 1;
    }
}

int fail(std::string_view code, const std::string& message, const std::string& detail, int rc) {
    ordered_json line{{"error", code}, {"message", message}};
    if (!detail.empty()) line["detail"] = detail;
    std::cerr << line.dump() << std::endl;
    return rc;
}

std::string format_psnr(double v) {
    if (std::isinf(v)) return "Infinite";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string format_ssim(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

int cmd_serve(const fs::path& config_path) {
    // Signals are taken synchronously by a watcher thread; every other thread
    // inherits the blocked mask.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    ServiceConfig config = ServiceConfig::load(config_path);
    Service service(config);
    const int port = service.bind();
    std::cout << ordered_json{{"listening", config.host + ":" + std::to_string(port)}}.dump()
              << std::endl;
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&set, &sig);
        service.stop();
    });
    service.serve();
    // serve() also returns when the server fails; wake the watcher either way.
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    return 0;
}

int cmd_ingest(const fs::path& images, const fs::path& captions, const fs::path& out) {
    const BackendSet backends = make_backends(default_backend_configs());
    const Catalog catalog = ingest(images, captions, *backends.embed, out);
    save(catalog, out);
    std::cout << ordered_json{{"catalog", out.string()},
                              {"records", catalog.records.size()},
                              {"embedding_dim", catalog.embedding_dim}}
                     .dump()
              << std::endl;
    return 0;
}

int cmd_match(const fs::path& catalog_dir, const std::string& query, std::size_t k) {
    const Catalog catalog = load(catalog_dir);
    const BackendSet backends = make_backends(default_backend_configs());
    const auto hits = search(catalog, query, k, *backends.embed);
    std::cout << "rank\tgarment_id\tscore\tcategory\tcaption\n";
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto& r = *std::find_if(catalog.records.begin(), catalog.records.end(),
                                      [&](const GarmentRecord& g) { return g.garment_id == hits[i].garment_id; });
        char score[32];
        std::snprintf(score, sizeof score, "%.6f", hits[i].score.value);
        std::cout << i + 1 << '\t' << r.garment_id << '\t' << score << '\t' << to_string(r.category)
                  << '\t' << r.caption << '\n';
    }
    return 0;
}

struct EditOptions {
    fs::path person;
    std::string instruction;
    fs::path out;
    std::optional<std::uint64_t> seed;
    bool mock = false;
    fs::path catalog;
    fs::path template_path;
    std::optional<double> tau;
};

int cmd_edit(const EditOptions& o) {
    BackendConfigs configs = default_backend_configs();
    if (o.mock) {
        for (auto& [kind, c] : configs) c.mode = BackendMode::Mock;
    }
    std::shared_ptr<const CatalogSnapshot> snapshot;
    if (!o.catalog.empty()) snapshot = load_snapshot(o.catalog);
    const auto tmpl = PromptTemplate::load(o.template_path.empty() ? default_template_path()
                                                                   : o.template_path);
    PipelineConfig pc;
    const bool remote_embed = configs[BackendKind::Embed].mode == BackendMode::Remote;
    pc.tau = o.tau.value_or(remote_embed ? kRemoteTau : kMockTau);
    Pipeline pipeline(make_backends(configs), tmpl, snapshot, pc);

    const RasterImage person = codec::read_png(o.person);
    const std::string session = pipeline.create_session("cli");
    const MessageResult result = pipeline.handle_message(session, o.instruction, person, o.seed);
    const ordered_json trace = to_json(result.step);
    std::cout << trace.dump() << std::endl;
    switch (result.step.outcome) {
        case Outcome::Edited:
            codec::write_png(o.out, *result.image);
            return 0;
        case Outcome::RefusedNotTryOn:
            return fail(to_string(ErrorCode::NotATryOnRequest), result.reply, "", 3);
        case Outcome::ErrorWithCode:
            break;
    }
    const ErrorCode code = result.step.error_code.value_or(ErrorCode::InvalidArgument);
    return fail(to_string(code), result.reply, result.step.error_detail, exit_code(code));
}

int cmd_eval(const fs::path& pairs) {
    const fs::path ref_dir = pairs / "ref";
    const fs::path gen_dir = pairs / "gen";
    if (!fs::is_directory(ref_dir) || !fs::is_directory(gen_dir)) {
        throw Error(ErrorCode::InvalidArgument,
                    "pairs directory must contain ref/ and gen/ subdirectories");
    }
    std::map<std::string, fs::path> refs;
    for (const auto& e : fs::directory_iterator(ref_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") {
            refs[e.path().filename().string()] = e.path();
        }
    }
    if (refs.empty()) throw Error(ErrorCode::InvalidArgument, "no .png files under ref/");

    std::cout << "image\tPSNR\tSSIM\n";
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& [name, ref_path] : refs) {
        const fs::path gen_path = gen_dir / name;
        if (!fs::is_regular_file(gen_path)) {
            throw Error(ErrorCode::MissingImage, "gen/" + name + " is missing", name);
        }
        const RasterImage a = codec::read_png(ref_path);
        const RasterImage b = codec::read_png(gen_path);
        const double p = psnr(a, b);
        const double s = ssim(a, b);
        psnr_sum += p;
        ssim_sum += s;
        std::cout << name << '\t' << format_psnr(p) << '\t' << format_ssim(s) << '\n';
    }
    const auto n = static_cast<double>(refs.size());
    std::cout << "mean\t" << format_psnr(psnr_sum / n) << '\t' << format_ssim(ssim_sum / n) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TalkFashion orchestration engine"};
    app.require_subcommand(1);

    fs::path config_path;
    auto* serve = app.add_subcommand("serve", "Run the REST service");
    serve->add_option("--config", config_path, "Service config (JSON)")->required();

    fs::path images, captions, out_dir;
    auto* ingest_cmd = app.add_subcommand("ingest", "Embed garment images into a catalog");
    ingest_cmd->add_option("--images", images, "Directory of garment images")->required();
    ingest_cmd->add_option("--captions", captions, "TSV: filename, category, caption")->required();
    ingest_cmd->add_option("--out", out_dir, "Catalog directory to write")->required();

    fs::path catalog_dir;
    std::string query;
    std::size_t k = 5;
    auto* match = app.add_subcommand("match", "Rank catalog garments for a text query");
    match->add_option("--catalog", catalog_dir, "Catalog directory")->required();
    match->add_option("--query", query, "Garment description")->required();
    match->add_option("--k", k, "Number of results")->check(CLI::Range(1, 1000));

    EditOptions edit;
    std::uint64_t seed = 0;
    double tau = 0.0;
    auto* edit_cmd = app.add_subcommand("edit", "Apply one instruction to a person image");
    edit_cmd->add_option("--person", edit.person, "Person PNG")->required();
    edit_cmd->add_option("--instruction", edit.instruction, "Instruction text")->required();
    edit_cmd->add_option("--out", edit.out, "Output PNG")->required();
    auto* seed_opt = edit_cmd->add_option("--seed", seed, "Generator seed");
    edit_cmd->add_flag("--mock", edit.mock, "Use mock backends for every model");
    edit_cmd->add_option("--catalog", edit.catalog, "Catalog directory for full outfit changes");
    edit_cmd->add_option("--template", edit.template_path, "Prompt template (JSON)");
    auto* tau_opt = edit_cmd->add_option("--tau", tau, "Routing threshold")->check(CLI::Range(0.0, 1.0));

    fs::path pairs;
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM for paired images under ref/ and gen/");
    eval->add_option("--pairs", pairs, "Directory with ref/ and gen/")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("UsageError", e.what(), "", 2);
    }

    try {
        if (*serve) return cmd_serve(config_path);
        if (*ingest_cmd) return cmd_ingest(images, captions, out_dir);
        if (*match) return cmd_match(catalog_dir, query, k);
        if (*edit_cmd) {
            if (*seed_opt) edit.seed = seed;
            if (*tau_opt) edit.tau = tau;
            return cmd_edit(edit);
        }
        if (*eval) return cmd_eval(pairs);
    } catch (const Error& e) {
        return fail(to_string(e.code()), e.what(), e.detail(), exit_code(e.code()));
    } catch (const std::exception& e) {
        return fail("Internal", e.what(), "", 1);
    }
    return 1;
}
