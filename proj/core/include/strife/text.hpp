#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace strife::text {

/// Collapses runs of ASCII whitespace into one space and trims both ends.
/// Non-ASCII bytes (Greek, typographic quotes) pass through untouched.
std::string normalize_whitespace(std::string_view input);

std::string to_lower_ascii(std::string_view input);

std::string trim(std::string_view input);

std::vector<std::string> split(std::string_view input, char delimiter);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a whole file; throws Error(kNotFound) if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// 64-bit FNV-1a; stable across platforms, used for feature hashing.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Current UTC time as ISO-8601 with millisecond precision.
std::string utc_timestamp();

}  // namespace strife::text
