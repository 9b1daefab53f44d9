#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cycleprompt {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents. Throws PreconditionError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
/// Throws ParseError on malformed input.
std::string base64_decode(std::string_view text);

// Stable 64-bit FNV-1a; used to derive per-task seeds.
std::uint64_t fnv1a64(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename. Throws FileWriteError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace cycleprompt
