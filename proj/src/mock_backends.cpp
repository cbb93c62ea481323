#include "talkfashion/mock_backends.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "talkfashion/error.hpp"
#include "talkfashion/prompt_engine.hpp"
#include "talkfashion/response_parser.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion::mock {
namespace {

constexpr std::array<PaletteColor, 13> kPalette{{
    {"red", 200, 30, 40},
    {"orange", 240, 140, 30},
    {"yellow", 240, 210, 40},
    {"green", 40, 150, 60},
    {"blue", 40, 80, 200},
    {"navy", 20, 30, 90},
    {"purple", 120, 50, 160},
    {"pink", 240, 150, 180},
    {"brown", 120, 80, 40},
    {"beige", 220, 200, 160},
    {"white", 245, 245, 245},
    {"gray", 128, 128, 128},
    {"black", 20, 20, 20},
}};

constexpr double kColorWeight = 3.0;

const std::set<std::string_view> kStopwords = {
    "a",     "an",   "the",  "and",   "or",    "of",    "to",     "into",  "in",   "on",
    "with",  "for",  "me",   "my",    "i",     "i'd",   "i'm",    "like",  "want", "please",
    "change", "wear", "put", "try",   "make",  "switch", "some",  "this",  "that", "it",
    "be",    "can",  "you",  "would", "could", "let's", "show",   "give",  "now",  "instead",
};

const std::set<std::string_view> kRegionWords = {
    "sleeve", "sleeves", "collar", "neckline", "neck", "v-neck", "hem", "hemline", "cuff", "cuffs",
};
const std::set<std::string_view> kUpperNouns = {
    "top",    "tops",  "shirt",  "blouse", "sweater",  "t-shirt", "tshirt",
    "tee",    "jacket", "hoodie", "coat",  "cardigan", "polo",    "jumper",
};
const std::set<std::string_view> kLowerNouns = {
    "pants", "jeans", "trousers", "skirt", "shorts", "chinos", "leggings",
};
const std::set<std::string_view> kFullNouns = {"dress", "gown", "jumpsuit", "romper"};
const std::set<std::string_view> kMarkers = {"into", "to", "on", "wear", "try"};
const std::set<std::string_view> kArticles = {"a", "an", "the", "some", "my", "this", "that"};
const std::set<std::string_view> kPronouns = {"it", "them", "that", "those", "its"};
const std::set<std::string_view> kComparatives = {
    "shorter", "longer", "tighter", "looser", "wider", "narrower", "brighter", "darker", "lighter",
};

constexpr std::string_view kMockChatModel = "mock-chat-1";
constexpr std::string_view kOffTopicReply =
    "I can change your outfit or edit part of a garment. Tell me what you would like to wear.";

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::optional<ItemKind> item_of(std::string_view word) {
    if (kUpperNouns.count(word)) return ItemKind::UpperBody;
    if (kLowerNouns.count(word)) return ItemKind::LowerBody;
    if (kFullNouns.count(word)) return ItemKind::FullBody;
    return std::nullopt;
}

std::optional<ItemKind> last_item(const std::vector<std::string>& ws) {
    std::optional<ItemKind> found;
    for (const auto& w : ws) {
        if (auto k = item_of(w)) {
            found = k;
        }
    }
    return found;
}

std::optional<std::string> region_word(const std::vector<std::string>& ws) {
    for (const auto& w : ws) {
        if (kRegionWords.count(w)) {
            return w;
        }
    }
    return std::nullopt;
}

bool any_of_set(const std::vector<std::string>& ws, const std::set<std::string_view>& set) {
    return std::any_of(ws.begin(), ws.end(), [&](const std::string& w) { return set.count(w) > 0; });
}

std::string join(const std::vector<std::string>& ws, std::size_t from = 0) {
    std::string out;
    for (std::size_t i = from; i < ws.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += ws[i];
    }
    return out;
}

// Garment phrase following the last marker word that still has a garment
// noun after it ("change into the red floral top" -> "red floral top").
std::vector<std::string> garment_phrase(const std::vector<std::string>& ws) {
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
        if (!kMarkers.count(ws[i])) continue;
        const std::vector<std::string> rest(ws.begin() + static_cast<std::ptrdiff_t>(i + 1), ws.end());
        if (last_item(rest)) {
            start = i + 1;
        }
    }
    while (start < ws.size() && kArticles.count(ws[start])) {
        ++start;
    }
    return {ws.begin() + static_cast<std::ptrdiff_t>(start), ws.end()};
}

std::string instruction_of(const ChatMessage& m) {
    if (auto fenced = extract_instruction(m.content)) {
        return *fenced;
    }
    return m.content;
}

std::string sentence(std::string_view instruction) {
    return std::string(text::trim(instruction));
}

// Pixel-space region rules shared by the segmenter.
BinaryMask rows_of(const BinaryMask& region, bool from_top, double fraction) {
    const auto box = bounding_box(region);
    BinaryMask out(region.width(), region.height());
    if (!box) {
        return out;
    }
    const int band = std::max(1, static_cast<int>(std::floor(fraction * box->height)));
    const int y0 = from_top ? box->y : box->y + box->height - band;
    const int y1 = y0 + band;
    for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < region.width(); ++x) {
            if (region.get(x, y)) {
                out.set(x, y);
            }
        }
    }
    return out;
}

std::array<std::uint8_t, 3> pixel_rgb(const RasterImage& img, int x, int y) {
    if (img.channels() == 1) {
        const auto v = img.at(x, y);
        return {v, v, v};
    }
    return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
}

std::size_t nearest_palette(std::array<std::uint8_t, 3> px) {
    std::size_t best = 0;
    int best_d = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < kPalette.size(); ++i) {
        const int dr = px[0] - kPalette[i].r;
        const int dg = px[1] - kPalette[i].g;
        const int db = px[2] - kPalette[i].b;
        const int d = dr * dr + dg * dg + db * db;
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

template <typename T>
BackendResult<T> mock_result(T value, BackendKind kind, std::string_view model) {
    return {std::move(value), CallInfo{kind, BackendMode::Mock, std::string(model), 0}};
}

}  // namespace

std::span<const PaletteColor> palette() noexcept { return kPalette; }

std::size_t token_bucket(std::string_view token) {
    const std::string_view alias = token == "grey" ? std::string_view("gray") : token;
    for (std::size_t i = 0; i < kPalette.size(); ++i) {
        if (kPalette[i].name == alias) {
            return i;
        }
    }
    return kPalette.size() + text::fnv1a64(token) % (kEmbeddingDim - kPalette.size());
}

ParseMap default_body_layout(int width, int height) {
    ParseMap map(width, height);
    const auto fill = [&](int x0p, int x1p, int y0p, int y1p, ParseLabel label) {
        const int x0 = width * x0p / 100, x1 = width * x1p / 100;
        const int y0 = height * y0p / 100, y1 = height * y1p / 100;
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                map.set(x, y, label);
            }
        }
    };
    using L = ParseLabel;
    fill(40, 60, 4, 10, L::Hair);
    fill(42, 58, 10, 20, L::Face);
    fill(30, 70, 20, 52, L::UpperClothes);
    fill(20, 30, 22, 50, L::Arms);
    fill(70, 80, 22, 50, L::Arms);
    fill(32, 68, 52, 80, L::LowerClothes);
    fill(34, 48, 80, 94, L::Legs);
    fill(52, 66, 80, 94, L::Legs);
    fill(33, 49, 94, 98, L::Shoes);
    fill(51, 67, 94, 98, L::Shoes);
    return map;
}

ParseMap MockHumanParser::layout_for(int width, int height) const {
    if (fixture_ && fixture_->width() == width && fixture_->height() == height) {
        return *fixture_;
    }
    return default_body_layout(width, height);
}

BackendResult<ParseMap> MockHumanParser::parse(const RasterImage& image) {
    if (image.empty()) {
        throw Error(ErrorCode::InvalidArgument, "image must not be empty");
    }
    return mock_result(layout_for(image.width(), image.height()), BackendKind::ParseHuman,
                       "mock-parser-1");
}

BackendResult<std::string> MockChat::complete(std::span<const ChatMessage> messages) {
    require_user_last(messages);
    const std::string instruction = instruction_of(messages.back());
    const auto ws = text::words(instruction);

    if (region_word(ws)) {
        Invocation inv{FunctionKind::LocalizedEditing, ItemKind::Unspecified, sentence(instruction),
                       "Okay, working on it: " + sentence(instruction) + "."};
        return mock_result(to_wire(inv), BackendKind::Chat, kMockChatModel);
    }

    if (last_item(ws)) {
        const auto phrase = garment_phrase(ws);
        Invocation inv;
        inv.function = FunctionKind::FullOutfitChange;
        inv.item = last_item(phrase).value_or(*last_item(ws));
        inv.details = phrase.empty() ? join(ws) : join(phrase);
        inv.reply = "Sure! Trying on the " + inv.details + " for you.";
        return mock_result(to_wire(inv), BackendKind::Chat, kMockChatModel);
    }

    // "make it shorter" after an earlier turn that named a region.
    if (any_of_set(ws, kPronouns) && any_of_set(ws, kComparatives)) {
        for (auto it = messages.rbegin() + 1; it != messages.rend(); ++it) {
            if (it->role != "user") continue;
            if (auto region = region_word(text::words(instruction_of(*it)))) {
                Invocation inv{FunctionKind::LocalizedEditing, ItemKind::Unspecified,
                               sentence(instruction) + " (the " + *region + ")",
                               "Okay, adjusting the " + *region + " again."};
                return mock_result(to_wire(inv), BackendKind::Chat, kMockChatModel);
            }
        }
    }

    return mock_result(to_wire(NotATryOn{std::string(kOffTopicReply)}), BackendKind::Chat,
                       kMockChatModel);
}

BackendResult<EmbeddingVector> MockEmbedding::embed_text(std::string_view input) {
    require_nonblank(input, "text to embed");
    std::array<double, kEmbeddingDim> v{};
    bool any = false;
    for (const auto& w : text::words(input)) {
        if (kStopwords.count(w)) continue;
        const std::size_t b = token_bucket(w);
        v[b] += b < kPalette.size() ? kColorWeight : 1.0;
        any = true;
    }
    if (!any) {
        v[token_bucket(text::to_lower(text::trim(input)))] = 1.0;
    }
    return mock_result(normalize(std::span<const double>(v)), BackendKind::Embed,
                       "mock-embed-text-1");
}

BackendResult<EmbeddingVector> MockEmbedding::embed_image(const RasterImage& image) {
    if (image.empty()) {
        throw Error(ErrorCode::InvalidArgument, "image to embed must not be empty");
    }
    std::array<double, kEmbeddingDim> v{};
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            v[nearest_palette(pixel_rgb(image, x, y))] += 1.0;
        }
    }
    return mock_result(normalize(std::span<const double>(v)), BackendKind::Embed,
                       "mock-embed-image-1");
}

BackendResult<std::string> MockRefiner::refine(const RasterImage& image,
                                               std::string_view instruction) {
    require_nonblank(instruction, "instruction");
    if (image.empty()) {
        throw Error(ErrorCode::InvalidArgument, "image must not be empty");
    }
    return mock_result("a garment with " + sentence(instruction) +
                           ", photorealistic, consistent with the person's pose",
                       BackendKind::Refine, "mock-refiner-1");
}

BackendResult<BinaryMask> MockSegmenter::segment(const SegmentationQuery& query) {
    require_nonblank(query.instruction, "segmentation instruction");
    using L = ParseLabel;
    const ParseMap parse = parser_->layout_for(query.image.width(), query.image.height());
    const auto ws = text::words(query.instruction);
    const auto has = [&](std::initializer_list<std::string_view> keys) {
        return std::any_of(keys.begin(), keys.end(),
                           [&](std::string_view k) { return text::contains_word(ws, k); });
    };

    std::optional<BinaryMask> mask;
    if (has({"sleeve", "sleeves", "cuff", "cuffs"})) {
        mask = parse.select({L::Arms});
    } else if (has({"collar", "neckline", "neck", "v-neck"})) {
        mask = rows_of(parse.select({L::UpperClothes}), /*from_top=*/true, 0.15);
    } else if (has({"hem", "hemline"})) {
        BinaryMask garment = parse.select({L::Dress});
        const auto item = last_item(ws);
        if (item == ItemKind::UpperBody) {
            garment = parse.select({L::UpperClothes});
        } else if (item == ItemKind::LowerBody || (!item && garment.is_empty())) {
            garment = parse.select({L::LowerClothes});
        }
        if (garment.is_empty()) {
            garment = parse.select({L::UpperClothes});
        }
        mask = rows_of(garment, /*from_top=*/false, 0.20);
    } else if (auto item = last_item(ws)) {
        switch (*item) {
            case ItemKind::UpperBody: mask = parse.select({L::UpperClothes}); break;
            case ItemKind::LowerBody: mask = parse.select({L::LowerClothes}); break;
            default: mask = parse.select({L::Dress}); break;
        }
    }
    if (!mask || mask->is_empty()) {
        throw Error(ErrorCode::NoRegionFound,
                    "no editable region found for '" + query.instruction + "'",
                    std::string(to_string(BackendKind::Segment)));
    }
    return mock_result(std::move(*mask), BackendKind::Segment, "mock-segmenter-1");
}

BackendResult<RasterImage> MockPose::estimate(const RasterImage& image) {
    if (image.empty()) {
        throw Error(ErrorCode::InvalidArgument, "image must not be empty");
    }
    const int w = image.width();
    const int h = image.height();
    const ParseMap parse = parser_->layout_for(w, h);
    RasterImage pose(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto label = static_cast<int>(parse.get(x, y));
            if (label == 0) continue;
            pose.at(x, y, 0) = static_cast<std::uint8_t>(40 + 20 * label);
            pose.at(x, y, 1) = static_cast<std::uint8_t>(255 * y / std::max(1, h - 1));
            pose.at(x, y, 2) = static_cast<std::uint8_t>(255 * x / std::max(1, w - 1));
        }
    }
    return mock_result(std::move(pose), BackendKind::Pose, "mock-pose-1");
}

RasterImage to_rgb(const RasterImage& image) {
    if (image.channels() == 3) {
        return image;
    }
    RasterImage out(image.width(), image.height(), 3);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = image.at(x, y);
            }
        }
    }
    return out;
}

BackendResult<RasterImage> MockTryOn::try_on(const RasterImage& masked_person,
                                             const RasterImage& garment, std::uint64_t) {
    if (masked_person.empty() || garment.empty()) {
        throw Error(ErrorCode::InvalidArgument, "try-on inputs must not be empty");
    }
    const int w = masked_person.width();
    const int h = masked_person.height();
    const int ch = masked_person.channels();
    BinaryMask fill_region(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool is_fill = true;
            for (int c = 0; c < ch; ++c) {
                is_fill = is_fill && masked_person.at(x, y, c) == kMaskFill;
            }
            if (is_fill) fill_region.set(x, y);
        }
    }
    const auto box = bounding_box(fill_region);
    if (!box) {
        return mock_result(masked_person, BackendKind::TryOnImage, "mock-tryon-1");
    }
    RasterImage source = ch == 3 ? to_rgb(garment) : garment;
    if (ch == 1 && garment.channels() == 3) {
        const auto luma = to_luma(garment);
        std::vector<std::uint8_t> gray(luma.size());
        std::transform(luma.begin(), luma.end(), gray.begin(),
                       [](double v) { return static_cast<std::uint8_t>(std::lround(v)); });
        source = RasterImage(garment.width(), garment.height(), 1, std::move(gray));
    }
    const RasterImage scaled = resize_nearest(source, box->width, box->height);
    RasterImage patch = masked_person;
    for (int y = box->y; y < box->y + box->height; ++y) {
        for (int x = box->x; x < box->x + box->width; ++x) {
            for (int c = 0; c < ch; ++c) {
                patch.at(x, y, c) = scaled.at(x - box->x, y - box->y, c);
            }
        }
    }
    return mock_result(composite(masked_person, patch, fill_region), BackendKind::TryOnImage,
                       "mock-tryon-1");
}

BackendResult<RasterImage> MockEditor::edit(const EditRequest& request) {
    request.validate();
    const std::uint64_t key =
        splitmix64(text::fnv1a64(request.guidance_prompt) ^ splitmix64(request.seed));
    const int ch = request.masked_image.channels();
    std::array<int, 3> base{};
    for (int c = 0; c < 3; ++c) {
        base[static_cast<std::size_t>(c)] = static_cast<int>((key >> (8 * c)) & 0xFF);
    }
    RasterImage out = request.masked_image;
    const int w = out.width();
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            if (!request.mask.get(x, y)) continue;
            const int stripe = ((x + y) / 3) % 2 ? 40 : -40;
            const auto noise = static_cast<int>(
                splitmix64(key ^ static_cast<std::uint64_t>(y * w + x)) & 15);
            for (int c = 0; c < ch; ++c) {
                out.at(x, y, c) = static_cast<std::uint8_t>(
                    std::clamp(base[static_cast<std::size_t>(c)] + stripe + noise - 8, 0, 255));
            }
        }
    }
    return mock_result(std::move(out), BackendKind::EditText, "mock-editor-1");
}

BackendSet make_mock_backends(std::optional<ParseMap> fixture_parse) {
    auto parser = std::make_shared<MockHumanParser>(std::move(fixture_parse));
    BackendSet set;
    set.chat = std::make_shared<MockChat>();
    set.embed = std::make_shared<MockEmbedding>();
    set.refine = std::make_shared<MockRefiner>();
    set.segment = std::make_shared<MockSegmenter>(parser);
    set.parse_human = parser;
    set.pose = std::make_shared<MockPose>(parser);
    set.try_on = std::make_shared<MockTryOn>();
    set.edit = std::make_shared<MockEditor>();
    return set;
}

}  // namespace talkfashion::mock
