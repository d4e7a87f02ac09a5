#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kitscan::ingest {

enum class FileKind { Php, Js, Txt, Exe, Dll, Apk, Html, Css, Pdf, Multimedia, Other };

inline constexpr std::size_t kFileKindCount = 11;

std::string_view to_string(FileKind kind) noexcept;

struct FileEntry {
  std::string relative_path;
  FileKind kind = FileKind::Other;
  std::uint64_t size_bytes = 0;
  std::shared_ptr<const std::string> content;

  std::string_view bytes() const noexcept {
    return content ? std::string_view(*content) : std::string_view();
  }
  // Content decoded as UTF-8 with U+FFFD replacement.
  std::string text() const;
  // Last path component; for nested members, the part after the final '!'.
  std::string_view basename() const noexcept;
};

// Immutable after load_kit returns; safe to share between threads.
struct KitArchive {
  std::string kit_id;
  std::string origin_name;
  std::vector<FileEntry> entries;  // sorted by relative_path
  std::size_t directory_count = 0;
  std::vector<std::string> warnings;

  const FileEntry* find(std::string_view relative_path) const noexcept;
  std::array<std::size_t, kFileKindCount> kind_counts() const noexcept;
};

struct IngestLimits {
  std::uint64_t max_total_bytes = 512ull << 20;
  std::uint64_t max_entry_bytes = 32ull << 20;
  std::size_t max_entries = 50'000;
  std::size_t max_nested_archive_depth = 1;

  // Throws Error{InvalidArgument} if any limit is zero.
  void validate() const;
};

// Extension-based classification, case-insensitive. `first_bytes` is accepted
// for callers that have it but the mapping is decided by extension alone.
FileKind classify_file(std::string_view relative_path, std::string_view first_bytes = {});

// Resolves '.', '..', duplicate separators and backslashes. Returns nullopt
// when the path is absolute, empty, or climbs above the root.
std::optional<std::string> normalize_entry_path(std::string_view raw);

// Distinct non-root directory prefixes over the given slash-separated paths.
std::size_t count_directories(const std::vector<FileEntry>& entries);

// Loads a .zip, .tar, .tar.gz/.tgz archive or a plain directory. Nothing is
// written to disk. Throws Error with UnsupportedFormat, LimitExceeded,
// CorruptArchive, EncryptedArchive or IoError.
KitArchive load_kit(const std::filesystem::path& path, const IngestLimits& limits = {});

// Archive stem used as kit identifier ("a.tar.gz" -> "a").
std::string kit_id_for(const std::filesystem::path& path);

bool has_archive_extension(std::string_view name) noexcept;

struct KitRef {
  std::string kit_id;
  std::filesystem::path path;
};

struct CorpusListing {
  std::vector<KitRef> kits;  // sorted by kit_id, then by file name
  std::vector<std::string> warnings;
};

// Lists archives and kit directories directly under `root`. Other files are
// skipped with a warning. Throws Error{IoError}.
CorpusListing enumerate_corpus(const std::filesystem::path& root);

// One JSON object per line: {"kit_id":...,"warning":...}.
void write_warnings(std::ostream& out, const KitArchive& kit);

}  // namespace kitscan::ingest
