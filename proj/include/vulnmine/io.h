#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace vulnmine::io {

std::string read_file(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target so readers
// never observe a partially written artifact.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

// Shell-style glob over '/'-separated paths: '*' and '?' stay within one path
// segment, '**' spans segments ("**/" also matches zero segments).
bool glob_match(std::string_view pattern, std::string_view path);

} // namespace vulnmine::io
