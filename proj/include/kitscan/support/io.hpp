#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace kitscan::io {

// Both throw Error{IoError} on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Resolves a named config file. Precedence: explicit path, then
// $KITSCAN_CONFIG_DIR/<name>, then nothing (caller falls back to built-ins).
std::optional<std::filesystem::path> config_file(const std::optional<std::filesystem::path>& explicit_path,
                                                 std::string_view name);

}  // namespace kitscan::io
