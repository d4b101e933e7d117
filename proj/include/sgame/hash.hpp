#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sgame {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents; throws DataError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Fixture and cache lookups address prompts by this hash.
inline std::string prompt_hash(std::string_view prompt) { return sha256_hex(prompt); }

}  // namespace sgame
