#include "fixture_gen.hpp"

#include <array>
#include <fstream>
#include <random>

#include "talkfashion/catalog_store.hpp"
#include "talkfashion/codec.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/mock_backends.hpp"

namespace talkfashion::fixtures {
namespace {

using Rgb = std::array<std::uint8_t, 3>;

Rgb palette_rgb(std::string_view name) {
    for (const auto& p : mock::palette()) {
        if (p.name == name) return {p.r, p.g, p.b};
    }
    throw Error(ErrorCode::InvalidArgument, "no palette colour " + std::string(name));
}

void put(RasterImage& img, int x, int y, Rgb c) {
    for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[static_cast<std::size_t>(k)];
}

// Small signed jitter from raw mt19937 output; distributions are not
// portable across standard libraries.
std::uint8_t jitter(std::uint8_t v, std::mt19937& rng, int amplitude) {
    const int d = static_cast<int>(rng() % static_cast<unsigned>(2 * amplitude + 1)) - amplitude;
    return static_cast<std::uint8_t>(std::clamp(v + d, 0, 255));
}

// Garment silhouette in a 48x64 canvas.
bool inside(GarmentCategory cat, int x, int y) {
    switch (cat) {
        case GarmentCategory::Top:
            if (y >= 6 && y < 22) return x >= 4 && x < 44;         // shoulders and sleeves
            return y >= 22 && y < 58 && x >= 12 && x < 36;         // body
        case GarmentCategory::Bottom:
            if (y >= 4 && y < 16) return x >= 10 && x < 38;        // waist
            return y >= 16 && y < 60 && ((x >= 10 && x < 22) || (x >= 26 && x < 38));
        case GarmentCategory::Dress: {
            if (y < 4 || y >= 62) return false;
            const int half = 8 + (y - 4) / 4;                      // flared
            return x >= 24 - half && x < 24 + half;
        }
    }
    return false;
}

}  // namespace

const std::vector<GarmentSpec>& garment_specs() {
    static const std::vector<GarmentSpec> specs = {
        {"beige_chino_trousers", GarmentCategory::Bottom, "beige chino trousers"},
        {"black_pleated_skirt", GarmentCategory::Bottom, "black pleated skirt"},
        {"blue_denim_jeans", GarmentCategory::Bottom, "blue denim jeans"},
        {"green_striped_sweater", GarmentCategory::Top, "green striped sweater"},
        {"purple_evening_gown", GarmentCategory::Dress, "purple evening gown"},
        {"red_floral_top", GarmentCategory::Top, "red floral top"},
        {"white_cotton_shirt", GarmentCategory::Top, "white cotton shirt"},
        {"yellow_summer_dress", GarmentCategory::Dress, "yellow summer dress"},
    };
    return specs;
}

ParseMap person_parse() {
    return mock::default_body_layout(kPersonWidth, kPersonHeight);
}

RasterImage person_image() {
    const ParseMap parse = person_parse();
    RasterImage img(kPersonWidth, kPersonHeight, 3);
    std::mt19937 rng(20240601u);
    const Rgb skin{224, 180, 150};
    for (int y = 0; y < kPersonHeight; ++y) {
        for (int x = 0; x < kPersonWidth; ++x) {
            Rgb c;
            switch (parse.get(x, y)) {
                case ParseLabel::Hair: c = {90, 60, 30}; break;
                case ParseLabel::Face:
                case ParseLabel::Arms:
                case ParseLabel::Legs: c = skin; break;
                case ParseLabel::UpperClothes:
                    c = (y / 4) % 2 ? Rgb{60, 110, 140} : Rgb{70, 125, 150};
                    break;
                case ParseLabel::LowerClothes: c = {70, 70, 80}; break;
                case ParseLabel::Shoes: c = {25, 25, 25}; break;
                default: {
                    const auto v = static_cast<std::uint8_t>(230 - y * 40 / kPersonHeight);
                    c = {v, v, static_cast<std::uint8_t>(v + 10)};
                }
            }
            for (auto& ch : c) ch = jitter(ch, rng, 3);
            put(img, x, y, c);
        }
    }
    return img;
}

RasterImage garment_image(const GarmentSpec& spec) {
    constexpr int w = 48, h = 64;
    const auto words = [&] {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : spec.caption + " ") {
            if (ch == ' ') {
                if (!cur.empty()) out.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        return out;
    }();
    const Rgb main = palette_rgb(words.front());
    const Rgb white = palette_rgb("white");
    Rgb accent = white;
    if (words.front() == "white") accent = palette_rgb("gray");
    else if (words.front() == "blue") accent = palette_rgb("navy");
    else if (words.front() == "beige") accent = palette_rgb("brown");
    else if (words.front() == "purple") accent = palette_rgb("black");

    RasterImage img(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!inside(spec.category, x, y)) {
                put(img, x, y, white);
                continue;
            }
            bool pattern = false;
            if (spec.caption.find("floral") != std::string::npos) {
                pattern = (x % 8 == 3 || x % 8 == 4) && (y % 8 == 3 || y % 8 == 4);
            } else if (spec.caption.find("striped") != std::string::npos) {
                pattern = y % 6 < 2;
            } else if (spec.caption.find("pleated") != std::string::npos) {
                pattern = x % 5 == 0;
            } else {
                pattern = x % 12 == 0;  // seams, buttons
            }
            put(img, x, y, pattern ? accent : main);
        }
    }
    return img;
}

void write_all(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "garments");
    codec::write_png(dir / "person.png", person_image());
    const ParseMap parse = person_parse();
    codec::write_file(dir / "person_parse.png", codec::encode_parse_map(parse));

    std::string tsv = "# filename\tcategory\tcaption\n";
    for (const auto& g : garment_specs()) {
        codec::write_png(dir / "garments" / (g.id + ".png"), garment_image(g));
        tsv += g.id + ".png\t" + std::string(to_string(g.category)) + "\t" + g.caption + "\n";
    }
    codec::write_file(dir / "captions.tsv", codec::as_bytes(tsv));

    mock::MockEmbedding embed;
    const Catalog catalog = ingest(dir / "garments", dir / "captions.tsv", embed, dir / "catalog");
    save(catalog, dir / "catalog");
}

}  // namespace talkfashion::fixtures
