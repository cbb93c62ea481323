#include "talkfashion/catalog_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "talkfashion/codec.hpp"
#include "talkfashion/error.hpp"
#include "talkfashion/text.hpp"

namespace talkfashion {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr char kVecMagic[8] = {'T', 'F', 'C', 'A', 'T', 'V', 'E', 'C'};
constexpr std::size_t kVecHeaderSize = 8 + 4 + 4 + 8;
constexpr std::string_view kMetaFormat = "talkfashion-catalog";

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

[[noreturn]] void corrupt(const std::string& what) {
    throw Error(ErrorCode::CorruptIndex, what);
}

std::vector<std::uint8_t> encode_vectors(const Catalog& catalog) {
    std::vector<std::uint8_t> out(kVecMagic, kVecMagic + 8);
    put_u32(out, static_cast<std::uint32_t>(catalog.catalog_version));
    put_u32(out, static_cast<std::uint32_t>(catalog.embedding_dim));
    put_u64(out, catalog.records.size());
    out.reserve(out.size() + catalog.records.size() * catalog.embedding_dim * 4 + 4);
    for (const auto& r : catalog.records) {
        for (float f : r.embedding.values()) {
            put_u32(out, std::bit_cast<std::uint32_t>(f));
        }
    }
    put_u32(out, codec::crc32(out));
    return out;
}

// Metadata document; the checksum covers the compact dump of everything else.
ordered_json meta_body(const Catalog& catalog, std::uint32_t vec_crc) {
    ordered_json doc;
    doc["format"] = kMetaFormat;
    doc["catalog_version"] = catalog.catalog_version;
    doc["embedding_dim"] = catalog.embedding_dim;
    doc["record_count"] = catalog.records.size();
    doc["vec_file"] = kCatalogVecFile;
    doc["vec_crc32"] = vec_crc;
    doc["records"] = ordered_json::array();
    for (const auto& r : catalog.records) {
        doc["records"].push_back({{"garment_id", r.garment_id},
                                  {"category", to_string(r.category)},
                                  {"caption", r.caption},
                                  {"image_path", r.image_path}});
    }
    return doc;
}

std::uint32_t body_checksum(const ordered_json& body) {
    return codec::crc32(codec::as_bytes(body.dump()));
}

void write_atomically(const fs::path& path, std::span<const std::uint8_t> bytes) {
    const fs::path tmp = path.string() + ".tmp";
    codec::write_file(tmp, bytes);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return fields;
}

}  // namespace

Catalog ingest(const fs::path& image_dir, const fs::path& captions_file, EmbeddingBackend& embed,
               const fs::path& catalog_dir) {
    std::ifstream in(captions_file);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open captions file " + captions_file.string());
    }
    struct Entry {
        std::string file;
        GarmentCategory category;
        std::string caption;
    };
    std::vector<Entry> entries;
    std::set<std::string> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
        const auto fields = split_tabs(line);
        const std::string where = captions_file.filename().string() + ":" + std::to_string(line_no);
        if (fields.size() != 3) {
            throw Error(ErrorCode::CaptionParseError,
                        where + ": expected 3 tab-separated fields, got " +
                            std::to_string(fields.size()),
                        std::to_string(line_no));
        }
        const auto category = category_from_string(fields[1]);
        const std::string file(text::trim(fields[0]));
        const std::string caption(text::trim(fields[2]));
        if (!category || file.empty() || caption.empty()) {
            throw Error(ErrorCode::CaptionParseError,
                        where + ": bad filename, category or caption", std::to_string(line_no));
        }
        if (!ids.insert(fs::path(file).stem().string()).second) {
            throw Error(ErrorCode::CaptionParseError,
                        where + ": duplicate garment id " + fs::path(file).stem().string(),
                        std::to_string(line_no));
        }
        entries.push_back({file, *category, caption});
    }

    Catalog catalog;
    for (const auto& e : entries) {
        const fs::path image_path = image_dir / e.file;
        if (!fs::is_regular_file(image_path)) {
            throw Error(ErrorCode::MissingImage, "caption references missing image " + e.file, e.file);
        }
        const RasterImage image = codec::read_png(image_path);
        GarmentRecord r;
        r.garment_id = fs::path(e.file).stem().string();
        r.category = e.category;
        r.caption = e.caption;
        r.image_path = fs::proximate(image_path, catalog_dir).generic_string();
        r.embedding = embed.embed_image(image).value;
        if (catalog.embedding_dim == 0) {
            catalog.embedding_dim = r.embedding.dim();
        } else if (catalog.embedding_dim != r.embedding.dim()) {
            throw Error(ErrorCode::DimensionMismatch, "embedder returned inconsistent dimensions");
        }
        catalog.records.push_back(std::move(r));
    }
    std::sort(catalog.records.begin(), catalog.records.end(),
              [](const GarmentRecord& a, const GarmentRecord& b) { return a.garment_id < b.garment_id; });
    return catalog;
}

void save(const Catalog& catalog, const fs::path& catalog_dir) {
    for (const auto& r : catalog.records) {
        if (r.embedding.dim() != catalog.embedding_dim) {
            throw Error(ErrorCode::DimensionMismatch, "record " + r.garment_id + " has wrong dim");
        }
    }
    std::error_code ec;
    fs::create_directories(catalog_dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + catalog_dir.string() + ": " + ec.message());
    }
    const auto vec = encode_vectors(catalog);
    ordered_json meta = meta_body(catalog, get_u32(vec.data() + vec.size() - 4));
    meta["checksum"] = body_checksum(meta);
    const std::string meta_text = meta.dump(2) + "\n";

    write_atomically(catalog_dir / kCatalogVecFile, vec);
    write_atomically(catalog_dir / kCatalogMetaFile, codec::as_bytes(meta_text));
}

Catalog load(const fs::path& catalog_dir) {
    const auto meta_bytes = codec::read_file(catalog_dir / kCatalogMetaFile);
    ordered_json meta = ordered_json::parse(meta_bytes.begin(), meta_bytes.end(), nullptr, false);
    if (meta.is_discarded() || !meta.is_object()) {
        corrupt("catalog.meta is not a JSON object");
    }
    const auto version = meta.find("catalog_version");
    if (version == meta.end() || !version->is_number_integer()) {
        corrupt("catalog.meta lacks catalog_version");
    }
    if (version->get<long long>() != kCatalogFormatVersion) {
        throw Error(ErrorCode::VersionMismatch,
                    "catalog_version " + std::to_string(version->get<long long>()) +
                        " is not supported (expected " + std::to_string(kCatalogFormatVersion) + ")");
    }
    const auto stored = meta.find("checksum");
    if (stored == meta.end() || !stored->is_number_unsigned()) {
        corrupt("catalog.meta lacks its checksum");
    }
    const auto expected_checksum = stored->get<std::uint32_t>();
    meta.erase("checksum");
    if (body_checksum(meta) != expected_checksum) {
        corrupt("catalog.meta checksum mismatch");
    }

    Catalog catalog;
    std::uint32_t vec_crc = 0;
    std::size_t record_count = 0;
    try {
        catalog.embedding_dim = meta.at("embedding_dim").get<std::size_t>();
        record_count = meta.at("record_count").get<std::size_t>();
        vec_crc = meta.at("vec_crc32").get<std::uint32_t>();
        for (const auto& r : meta.at("records")) {
            GarmentRecord rec;
            rec.garment_id = r.at("garment_id").get<std::string>();
            const auto cat = category_from_string(r.at("category").get<std::string>());
            if (!cat) corrupt("unknown category for " + rec.garment_id);
            rec.category = *cat;
            rec.caption = r.at("caption").get<std::string>();
            rec.image_path = r.at("image_path").get<std::string>();
            catalog.records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        corrupt(std::string("catalog.meta is malformed: ") + e.what());
    }
    if (record_count != catalog.records.size()) {
        corrupt("record_count disagrees with the record list");
    }

    const auto vec = codec::read_file(catalog_dir / kCatalogVecFile);
    if (vec.size() < kVecHeaderSize + 4 || std::memcmp(vec.data(), kVecMagic, 8) != 0) {
        corrupt("catalog.vec header is truncated or has a bad magic");
    }
    const std::uint32_t trailer = get_u32(vec.data() + vec.size() - 4);
    if (codec::crc32(std::span(vec.data(), vec.size() - 4)) != trailer || trailer != vec_crc) {
        corrupt("catalog.vec checksum mismatch");
    }
    const std::uint32_t vec_version = get_u32(vec.data() + 8);
    const std::uint32_t dim = get_u32(vec.data() + 12);
    const std::uint64_t count = get_u64(vec.data() + 16);
    if (vec_version != static_cast<std::uint32_t>(kCatalogFormatVersion) ||
        dim != catalog.embedding_dim || count != record_count ||
        vec.size() != kVecHeaderSize + count * dim * 4 + 4) {
        corrupt("catalog.vec disagrees with catalog.meta");
    }

    std::set<std::string> ids;
    const std::uint8_t* p = vec.data() + kVecHeaderSize;
    for (auto& rec : catalog.records) {
        if (!ids.insert(rec.garment_id).second) {
            corrupt("duplicate garment id " + rec.garment_id);
        }
        std::vector<float> values(dim);
        for (auto& v : values) {
            v = std::bit_cast<float>(get_u32(p));
            p += 4;
        }
        try {
            rec.embedding = EmbeddingVector::from_unit(std::move(values));
        } catch (const Error& e) {
            corrupt("embedding for " + rec.garment_id + ": " + e.what());
        }
        if (!fs::is_regular_file(catalog_dir / rec.image_path)) {
            throw Error(ErrorCode::MissingImage, "garment image missing: " + rec.image_path,
                        rec.image_path);
        }
    }
    return catalog;
}

std::vector<ScoredGarment> search(const Catalog& catalog, std::string_view query_text,
                                  std::size_t k, EmbeddingBackend& embed, ItemKind item_filter) {
    if (k < 1) {
        throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    }
    const auto query = embed.embed_text(query_text).value;
    return top_k(query, catalog, k, item_filter);
}

const GarmentRecord* CatalogSnapshot::find(std::string_view garment_id) const {
    const auto it = std::lower_bound(
        catalog.records.begin(), catalog.records.end(), garment_id,
        [](const GarmentRecord& r, std::string_view id) { return r.garment_id < id; });
    return it != catalog.records.end() && it->garment_id == garment_id ? &*it : nullptr;
}

RasterImage CatalogSnapshot::load_image(const GarmentRecord& record) const {
    const fs::path path = root / record.image_path;
    if (!fs::is_regular_file(path)) {
        throw Error(ErrorCode::MissingImage, "garment image missing: " + record.image_path,
                    record.image_path);
    }
    return codec::read_png(path);
}

std::shared_ptr<const CatalogSnapshot> load_snapshot(const fs::path& catalog_dir,
                                                     std::uint64_t generation) {
    auto snap = std::make_shared<CatalogSnapshot>();
    snap->catalog = load(catalog_dir);
    snap->root = catalog_dir;
    snap->generation = generation;
    return snap;
}

}  // namespace talkfashion
