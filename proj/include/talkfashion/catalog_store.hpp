#pragma once

// On-disk layout of a catalog directory:
//
//   catalog.meta  JSON header + records (garment_id, category, caption,
//                 image_path relative to the directory) + CRC-32 checksum
//   catalog.vec   "TFCATVEC", u32 format version, u32 dim, u64 count,
//                 count * dim little-endian f32, u32 CRC-32 of all of the above
//
// Both files are written to temporaries and renamed into place.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>
#include <vector>

#include "talkfashion/backends.hpp"
#include "talkfashion/matching.hpp"

namespace talkfashion {

inline constexpr std::string_view kCatalogMetaFile = "catalog.meta";
inline constexpr std::string_view kCatalogVecFile = "catalog.vec";

// Reads `filename<TAB>category<TAB>caption` lines (blank and '#' lines
// skipped), embeds each image with `embed`, and returns records sorted by
// garment_id (the file stem). image_path is stored relative to
// `catalog_dir`. Throws MissingImage(name), CaptionParseError(line),
// backend errors.
Catalog ingest(const std::filesystem::path& image_dir, const std::filesystem::path& captions_file,
               EmbeddingBackend& embed, const std::filesystem::path& catalog_dir);

// Throws IoError.
void save(const Catalog& catalog, const std::filesystem::path& catalog_dir);

// Throws IoError, VersionMismatch, CorruptIndex, MissingImage.
Catalog load(const std::filesystem::path& catalog_dir);

// Top-k garments for a free-text query. Throws EmptyCatalog,
// InvalidArgument (k < 1), backend errors.
std::vector<ScoredGarment> search(const Catalog& catalog, std::string_view query_text,
                                  std::size_t k, EmbeddingBackend& embed,
                                  ItemKind item_filter = ItemKind::Unspecified);

// A loaded catalog plus what the service needs around it. Immutable; the
// service swaps whole snapshots on reload.
struct CatalogSnapshot {
    Catalog catalog;
    std::filesystem::path root;
    std::uint64_t generation = 0;

    const GarmentRecord* find(std::string_view garment_id) const;
    RasterImage load_image(const GarmentRecord& record) const;
};

std::shared_ptr<const CatalogSnapshot> load_snapshot(const std::filesystem::path& catalog_dir,
                                                     std::uint64_t generation = 1);

}  // namespace talkfashion
