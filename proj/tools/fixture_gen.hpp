#pragma once

// Synthetic fixtures for the mock stack: a person photo with its parse map
// and a small garment catalog. Output is byte-stable across platforms.

#include <filesystem>
#include <string>
#include <vector>

#include "talkfashion/imaging.hpp"
#include "talkfashion/matching.hpp"

namespace talkfashion::fixtures {

inline constexpr int kPersonWidth = 96;
inline constexpr int kPersonHeight = 128;

struct GarmentSpec {
    std::string id;
    GarmentCategory category;
    std::string caption;
};

const std::vector<GarmentSpec>& garment_specs();

ParseMap person_parse();
RasterImage person_image();
RasterImage garment_image(const GarmentSpec& spec);

// Writes person.png, person_parse.png, garments/, captions.tsv and an
// ingested catalog/ (mock embeddings) under `dir`.
void write_all(const std::filesystem::path& dir);

}  // namespace talkfashion::fixtures
