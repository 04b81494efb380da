#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ikon {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes; throws ikon::Error(UnreadableSource) if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, so readers never observe a
/// half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace ikon
