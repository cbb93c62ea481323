// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "talkfashion/catalog_store.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/kernels.hpp"
#include "talkfashion/pipeline.hpp"
#include "talkfashion/response_parser.hpp"
#include "test_support.hpp"

using namespace talkfashion;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool ok = true;
    std::string note;  // summary on success, first problem on failure

    void fail(const std::string& why) {
        if (ok) note = why;
        ok = false;
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// --- routing ---------------------------------------------------------------

Verdict routing_law() {
    Verdict v;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit01(0.0, 1.0), score_dist(-1.0, 1.0);
    const auto t0 = Clock::now();
    int checked = 0, boundary = 0;
    for (int i = 0; i < 10000; ++i) {
        double tau = unit01(rng);
        double score = score_dist(rng);
        switch (i % 5) {
            case 0: score = tau; ++boundary; break;
            case 1: score = std::nextafter(tau, -2.0); ++boundary; break;
            case 2: score = std::nextafter(tau, 2.0); ++boundary; break;
            default: break;
        }
        if (i == 0) tau = score = 0.0;
        if (i == 5) tau = score = 1.0;
        const bool want = score >= tau;
        const bool got = is_image_based(route(ScoredGarment{"g", MatchScore{score}}, tau));
        if (got != want) v.fail(fmt("score %.17g tau %.17g routed wrong", score, tau));
        ++checked;
    }
    const double s = seconds_since(t0);
    if (s >= 1.0) v.fail(fmt("took %.3f s", s));
    if (v.ok) v.note = fmt("%d pairs, %d at the boundary, %.1f ms", checked, boundary, s * 1e3);
    return v;
}

// --- matching --------------------------------------------------------------

Verdict matching_oracle() {
    Verdict v;
    std::mt19937_64 rng(77);
    const auto t0 = Clock::now();
    std::vector<const kernels::KernelTable*> tables{&kernels::scalar_table()};
    if (kernels::simd_table()) tables.push_back(kernels::simd_table());
    const auto& original = kernels::active();
    int queries = 0, ties = 0;
    for (int qi = 0; qi < 100; ++qi) {
        const std::size_t dim = 8 + rng() % 120;
        const std::size_t n = 1 + rng() % 1000;
        Catalog c;
        c.embedding_dim = dim;
        for (std::size_t i = 0; i < n; ++i) {
            c.records.push_back({fmt("g%06zu", i), static_cast<GarmentCategory>(rng() % 3), "", "",
                                 tfx::random_unit(rng, dim)});
        }
        // Exact duplicates under a larger id exercise the tie-break.
        for (int d = int(rng() % 4); d > 0; --d) {
            const auto& src = c.records[rng() % n];
            c.records.push_back({"z" + src.garment_id, src.category, "", "", src.embedding});
            ++ties;
        }
        const auto q = qi % 10 == 0 ? c.records[rng() % c.records.size()].embedding : tfx::random_unit(rng, dim);
        const auto item = static_cast<ItemKind>(rng() % 4);
        const auto want = oracle::best_match(q, c, item);
        for (const auto* table : tables) {
            kernels::set_active(*table);
            try {
                const auto got = best_match(q, c, item);
                if (!want) {
                    v.fail("expected EmptyCatalog");
                } else if (got.garment_id != want->id || std::abs(got.score.value - want->score) > 1e-12) {
                    v.fail(fmt("query %d (%s): got %s %.17g, oracle %s %.17g", qi,
                               std::string(kernels::to_string(table->isa)).c_str(), got.garment_id.c_str(),
                               got.score.value, want->id.c_str(), want->score));
                }
            } catch (const Error& e) {
                if (want || e.code() != ErrorCode::EmptyCatalog) v.fail(e.what());
            }
        }
        ++queries;
    }
    kernels::set_active(original);
    const double s = seconds_since(t0);
    if (s >= 10.0) v.fail(fmt("took %.3f s", s));
    if (v.ok) v.note = fmt("%d queries x %zu kernel tables, %d planted ties, %.2f s", queries, tables.size(), ties, s);
    return v;
}

// --- image metrics ---------------------------------------------------------

Verdict image_metrics() {
    Verdict v;
    std::mt19937_64 rng(31);
    double worst_psnr = 0.0, worst_ssim = 0.0;
    for (int i = 0; i < 20; ++i) {
        const int ch = i % 2 ? 3 : 1;
        const auto a = tfx::random_image(rng, 32, 32, ch);
        RasterImage b = a;
        if (i % 4 == 0) {
            b = tfx::random_image(rng, 32, 32, ch);
        } else {
            std::normal_distribution<double> noise(0.0, 4.0 * (i % 7 + 1));
            for (auto& px : b.data()) px = static_cast<std::uint8_t>(std::clamp(px + noise(rng), 0.0, 255.0));
        }
        const double dp = std::abs(psnr(a, b) - oracle::psnr(a, b));
        const double ds = std::abs(ssim(a, b) - oracle::ssim(a, b));
        worst_psnr = std::max(worst_psnr, dp);
        worst_ssim = std::max(worst_ssim, ds);
        if (!(dp <= 1e-3)) v.fail(fmt("pair %d psnr off by %g", i, dp));
        if (!(ds <= 1e-6)) v.fail(fmt("pair %d ssim off by %g", i, ds));
    }
    const auto same = tfx::random_image(rng, 32, 32, 3);
    if (!std::isinf(psnr(same, same))) v.fail("identical images: psnr not infinite");
    if (ssim(same, same) != 1.0) v.fail("identical images: ssim not 1.0");
    if (psnr(RasterImage(32, 32, 3, 0), RasterImage(32, 32, 3, 255)) != 0.0) v.fail("0 vs 255: psnr not 0 dB");
    if (v.ok) v.note = fmt("20 pairs, max |dPSNR| %.2g dB, max |dSSIM| %.2g, anchors exact", worst_psnr, worst_ssim);
    return v;
}

// --- parser ----------------------------------------------------------------

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::vector<std::string> atoms = {"a", "Z", "0", " ", "{", "}", "\"", "\\", "\n", "\t",
                                                   ":", ",", "é", "✓", "[", "]", "none", "sleeves"};
    std::string s;
    for (std::size_t n = rng() % (max_len + 1); n > 0; --n) s += atoms[rng() % atoms.size()];
    return s;
}

Verdict parser_robustness() {
    Verdict v;
    std::mt19937_64 rng(4242);
    const auto t0 = Clock::now();
    const std::vector<std::string> seeds = {
        to_wire(Invocation{FunctionKind::FullOutfitChange, ItemKind::UpperBody, "red floral top", "Sure!"}),
        to_wire(Invocation{FunctionKind::LocalizedEditing, ItemKind::Unspecified, "shorten the sleeves", ""}),
        to_wire(NotATryOn{"I can only help with outfits."}),
        "Here you go: {\"function\": \"full_outfit_change\", \"item\": \"full_body\", \"details\": \"gown\"} ok",
    };
    long typed = 0, parsed = 0;
    for (long i = 0; i < 1000000; ++i) {
        std::string s;
        if (i % 8 == 0) {
            s.resize(rng() % 64);
            for (auto& c : s) c = static_cast<char>(rng() & 0xFF);
        } else {
            s = seeds[rng() % seeds.size()];
            for (int m = 1 + int(rng() % 6); m > 0; --m) {
                const std::size_t pos = rng() % (s.size() + 1);
                switch (rng() % 4) {
                    case 0: s.insert(pos, 1, static_cast<char>(rng() & 0xFF)); break;
                    case 1: if (pos < s.size()) s.erase(pos, 1); break;
                    case 2: if (pos < s.size()) s[pos] = static_cast<char>(rng() & 0xFF); break;
                    default: s.insert(pos, random_text(rng, 4)); break;
                }
            }
        }
        try {
            parse_invocation(s);
            ++parsed;
        } catch (const Error&) {
            ++typed;
        } catch (const std::exception& e) {
            v.fail(std::string("untyped exception: ") + e.what());
        }
    }

    int round_trips = 0;
    for (int i = 0; i < 1000; ++i) {
        Invocation inv;
        inv.function = rng() % 2 ? FunctionKind::FullOutfitChange : FunctionKind::LocalizedEditing;
        inv.item = static_cast<ItemKind>(rng() % (inv.function == FunctionKind::FullOutfitChange ? 3 : 4));
        inv.details = "x" + random_text(rng, 12);
        inv.reply = random_text(rng, 12);
        try {
            if (parse_invocation(to_wire(inv)) != inv) v.fail("round trip changed " + to_wire(inv));
            ++round_trips;
        } catch (const Error& e) {
            v.fail(std::string("round trip threw: ") + e.what());
        }
    }
    if (v.ok) {
        v.note = fmt("1000000 fuzz inputs (%ld parsed, %ld typed errors), %d round trips, %.1f s", parsed, typed,
                     round_trips, seconds_since(t0));
    }
    return v;
}

// --- end-to-end sessions ---------------------------------------------------

struct Turn {
    std::string text;
    bool attach_person = false;
};

const std::vector<std::vector<Turn>>& scripts() {
    static const std::vector<std::vector<Turn>> s = {
        {{"change into the red floral top", true}, {"shorten the sleeves"}, {"make it shorter"}},
        {{"I want to wear the white cotton shirt", true}, {"raise the hem of the shirt"}},
        {{"I'd like to try the green striped sweater", true}, {"make the collar round"}},
        {{"put on the blue denim jeans", true}, {"raise the hem"}},
        {{"change into the black pleated skirt", true}, {"what's the weather"}, {"shorten the hem"}},
        {{"switch to the beige chino trousers", true}, {"roll up the sleeves"}},
        {{"try on the yellow summer dress", true}, {"make the neckline lower"}},
        {{"change into the purple evening gown", true}, {"shorten the sleeves"}},
        {{"change into a chartreuse hazmat gown", true}, {"shorten the sleeves"}},
        {{"red shirt", true}, {"tell me a joke"}, {"widen the cuffs"}},
        {{"what's the weather"}, {"change into the white cotton shirt", true}, {"add sparkles"}},
        {{"shorten the sleeves", true}, {"change into the blue denim jeans"}, {"change into the red floral top"}},
    };
    return s;
}

struct SessionRun {
    std::string trace_json;
    std::vector<std::vector<std::uint8_t>> outputs;
    std::vector<RouteKind> routes;
    int edited = 0;
    std::string preservation_problem;
};

SessionRun run_session(const std::vector<Turn>& script, const std::string& id, bool vandal) {
    auto backends = tfx::fixture_mocks();
    if (vandal) {
        backends.try_on = std::make_shared<tfx::VandalTryOn>();
        backends.edit = std::make_shared<tfx::VandalEditor>();
    }
    static const auto catalog = load_snapshot(tfx::fixtures_dir() / "catalog");
    Pipeline p(std::move(backends), tfx::default_template(), catalog, PipelineConfig{});
    const auto sid = p.create_session(id);
    const auto person = tfx::fixture_person();

    SessionRun run;
    std::optional<RasterImage> before;
    for (const auto& turn : script) {
        if (turn.attach_person) before = person;
        const auto r = p.handle_message(sid, turn.text, turn.attach_person ? std::optional(person) : std::nullopt);
        run.routes.push_back(r.step.route);
        if (r.step.outcome != Outcome::Edited) continue;
        ++run.edited;
        run.outputs.push_back(codec::encode_png(*r.image));
        const auto mask_png = p.images().get(r.step.mask->mask_image_id);
        if (!mask_png || !before) {
            run.preservation_problem = "missing mask or input for step " + std::to_string(r.step.step_index);
        } else {
            const BinaryMask mask = binarize(codec::decode_png(*mask_png));
            if (!tfx::diff_mask(*before, *r.image).subset_of(mask)) {
                run.preservation_problem = "pixels outside the mask changed: session " + id + " step " +
                                           std::to_string(r.step.step_index);
            }
        }
        before = r.image;
    }
    run.trace_json = to_json(p.trace(sid)).dump();
    return run;
}

struct SuiteResult {
    Verdict preservation, determinism, both_routes;
};

SuiteResult end_to_end() {
    SuiteResult out;
    const auto t0 = Clock::now();
    int edited = 0, image_routes = 0, text_routes = 0, sessions = 0;
    for (std::size_t i = 0; i < scripts().size(); ++i) {
        const std::string id = "s" + std::to_string(i);
        try {
            const auto a = run_session(scripts()[i], id, false);
            const auto b = run_session(scripts()[i], id, false);
            const auto vandal = run_session(scripts()[i], id, true);
            sessions += 1;
            edited += a.edited + vandal.edited;
            for (const auto* r : {&a, &vandal}) {
                if (!r->preservation_problem.empty()) {
                    out.preservation.fail(r->preservation_problem + (r == &vandal ? " (misbehaving generator)" : ""));
                }
            }
            if (a.trace_json != b.trace_json) out.determinism.fail("trace differs on replay of " + id);
            if (a.outputs != b.outputs) out.determinism.fail("images differ on replay of " + id);
            for (auto r : a.routes) {
                image_routes += r == RouteKind::ImageBased;
                text_routes += r == RouteKind::TextBased;
            }
        } catch (const std::exception& e) {
            out.preservation.fail(id + " threw: " + e.what());
            out.determinism.fail(id + " threw: " + e.what());
        }
    }
    const double s = seconds_since(t0);
    if (sessions < 10) out.preservation.fail(fmt("only %d sessions ran", sessions));
    if (edited == 0) out.preservation.fail("no edited outcomes to check");
    if (s >= 60.0) out.determinism.fail(fmt("suite took %.1f s", s));
    if (image_routes == 0) out.both_routes.fail("no image-based route at tau 0.50");
    if (text_routes == 0) out.both_routes.fail("no text-based route at tau 0.50");
    if (out.preservation.ok) {
        out.preservation.note = fmt("%d sessions, %d edited steps (incl. misbehaving generator), 0 stray pixels",
                                    sessions, edited);
    }
    if (out.determinism.ok) out.determinism.note = fmt("%d sessions replayed byte-identical, %.2f s", sessions, s);
    if (out.both_routes.ok) out.both_routes.note = fmt("%d image-based, %d text-based", image_routes, text_routes);
    return out;
}

// --- catalog ---------------------------------------------------------------

ErrorCode load_error(const fs::path& dir) {
    try {
        load(dir);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;  // sentinel: load succeeded
}

Verdict catalog_persistence() {
    Verdict v;
    tfx::TempDir tmp;
    std::mt19937_64 rng(100);
    fs::create_directories(tmp / "img");
    codec::write_png(tmp / "img" / "g.png", RasterImage(4, 4, 3, 7));
    Catalog c;
    c.embedding_dim = 48;
    for (int i = 0; i < 100; ++i) {
        c.records.push_back({fmt("garment_%03d", i), static_cast<GarmentCategory>(i % 3),
                             fmt("caption %d with \"quotes\" and ünïcode", i), "img/g.png",
                             tfx::random_unit(rng, 48)});
    }
    save(c, tmp.path());
    try {
        const Catalog back = load(tmp.path());
        if (back != c) v.fail("round trip changed the catalog");
        for (std::size_t i = 0; i < c.records.size() && v.ok; ++i) {
            const auto& x = c.records[i].embedding.values();
            const auto& y = back.records[i].embedding.values();
            if (std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) != 0) v.fail("embedding bytes differ");
        }
    } catch (const Error& e) {
        v.fail(std::string("clean load threw: ") + e.what());
    }

    const auto meta = tmp / std::string(kCatalogMetaFile);
    const auto vec = tmp / std::string(kCatalogVecFile);
    const auto good_meta = codec::read_file(meta);
    const auto good_vec = codec::read_file(vec);
    struct Damage {
        std::string name;
        fs::path file;
        std::function<void(std::vector<std::uint8_t>&)> apply;
    };
    const std::string meta_text(good_meta.begin(), good_meta.end());
    const std::size_t caption_at = meta_text.find("caption 5");
    const std::vector<Damage> damages = {
        {"vector byte flipped", vec, [](auto& b) { b[24 + 4 * 123] ^= 0x10; }},
        {"vector header flipped", vec, [](auto& b) { b[13] ^= 0x01; }},
        {"vector truncated", vec, [](auto& b) { b.resize(b.size() - 9); }},
        {"vector extended", vec, [](auto& b) { b.push_back(0); }},
        {"meta caption edited", meta, [caption_at](auto& b) { b[caption_at + 8] = '6'; }},
        {"meta truncated", meta, [](auto& b) { b.resize(b.size() / 2); }},
        {"meta emptied", meta, [](auto& b) { b.clear(); }},
    };
    int detected = 0;
    for (const auto& d : damages) {
        codec::write_file(meta, good_meta);
        codec::write_file(vec, good_vec);
        auto bytes = codec::read_file(d.file);
        d.apply(bytes);
        codec::write_file(d.file, bytes);
        const auto code = load_error(tmp.path());
        if (code != ErrorCode::CorruptIndex) {
            v.fail(d.name + ": got " + std::string(to_string(code)) + " instead of CorruptIndex");
        } else {
            ++detected;
        }
    }
    if (v.ok) v.note = fmt("100 records lossless, %d/%zu corruptions -> CorruptIndex", detected, damages.size());
    return v;
}

}  // namespace

int main() {
    int failures = 0;
    const auto report = [&](const char* name, const Verdict& v) {
        std::printf("%s  %-28s %s\n", v.ok ? "PASS" : "FAIL", name, v.note.c_str());
        std::fflush(stdout);
        failures += !v.ok;
    };
    const auto t0 = Clock::now();
    report("routing_law", routing_law());
    report("matching_oracle", matching_oracle());
    report("psnr_ssim_oracle", image_metrics());
    report("parser_robustness", parser_robustness());
    const auto e2e = end_to_end();
    report("outside_mask_preservation", e2e.preservation);
    report("end_to_end_determinism", e2e.determinism);
    report("both_routes_at_default_tau", e2e.both_routes);
    report("catalog_persistence", catalog_persistence());
    std::printf("%d of 8 criteria passed in %.1f s (kernels: %s)\n", 8 - failures, seconds_since(t0),
                std::string(kernels::to_string(kernels::active().isa)).c_str());
    return failures == 0 ? 0 : 1;
}
