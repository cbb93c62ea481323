#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "talkfashion/imaging.hpp"

namespace talkfashion::codec {

// PNG <-> RasterImage. Gray and gray+alpha decode to 1 channel, everything
// else to 3 channels (alpha dropped). Throws ImageDecodeError.
RasterImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RasterImage& image);

RasterImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& image);

// Label-index PNG (1 channel); throws InvalidArgument on out-of-schema labels.
ParseMap decode_parse_map(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_parse_map(const ParseMap& parse);

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws InvalidArgument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace talkfashion::codec
