#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace delib {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's raw bytes.
std::string sha256_file(const std::filesystem::path& path);

/// 64-bit FNV-1a followed by a SplitMix64 finaliser; used to derive
/// independent RNG streams from textual keys.
std::uint64_t stable_hash(std::string_view text, std::uint64_t seed = 0);

std::uint64_t mix64(std::uint64_t x);

}  // namespace delib
