#include "kitscan/support/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kitscan/error.hpp"

namespace kitscan::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::optional<std::filesystem::path> config_file(const std::optional<std::filesystem::path>& explicit_path,
                                                 std::string_view name) {
  if (explicit_path) return explicit_path;
  if (const char* dir = std::getenv("KITSCAN_CONFIG_DIR"); dir != nullptr && *dir != '\0') {
    std::filesystem::path candidate = std::filesystem::path(dir) / std::string(name);
    std::error_code ec;
    if (std::filesystem::is_regular_file(candidate, ec)) return candidate;
  }
  return std::nullopt;
}

}  // namespace kitscan::io
