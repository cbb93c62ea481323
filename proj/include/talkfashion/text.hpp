#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace talkfashion::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

// Lowercased runs of [a-z0-9'-]; everything else separates words.
std::vector<std::string> words(std::string_view s);

bool contains_word(const std::vector<std::string>& words, std::string_view w);

// 64-bit FNV-1a. Stable across platforms; used for seeds, mock hashing and
// content-addressed ids that do not need cryptographic strength.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

std::string hex64(std::uint64_t v);

}  // namespace talkfashion::text
