#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kitscan/ingest.hpp"

namespace kitscan::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path write(const std::string& relative, std::string_view content) const;

 private:
  std::filesystem::path path_;
};

struct ArchiveMember {
  std::string name;
  std::string data;
};

struct ZipOptions {
  bool deflate = true;
  bool encrypted_flag = false;
  bool corrupt_crc = false;
};

// Minimal writers used to build hostile or nested fixture archives in memory.
std::string make_zip(const std::vector<ArchiveMember>& members, const ZipOptions& options = {});
std::string make_tar(const std::vector<ArchiveMember>& members);
std::string make_gzip(std::string_view data);

// Every regular file under `root`, as (relative path, bytes), sorted.
std::vector<std::pair<std::string, std::string>> snapshot_tree(const std::filesystem::path& root);

// In-memory kit with entries classified and sorted as load_kit would.
ingest::KitArchive make_kit(const std::vector<std::pair<std::string, std::string>>& files,
                            std::string kit_id = "kit");

}  // namespace kitscan::testing
