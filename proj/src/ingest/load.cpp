#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <system_error>
#include <tuple>
#include <unordered_map>
#include <utility>

#include "formats.hpp"
#include "kitscan/error.hpp"
#include "kitscan/ingest.hpp"
#include "kitscan/support/encoding.hpp"
#include "kitscan/support/io.hpp"
#include "kitscan/support/json.hpp"
#include "kitscan/support/text.hpp"

namespace fs = std::filesystem;

namespace kitscan::ingest {

namespace {

const std::unordered_map<std::string_view, FileKind>& extension_table() {
  static const std::unordered_map<std::string_view, FileKind> table = {
      {"php", FileKind::Php},         {"php3", FileKind::Php},        {"php4", FileKind::Php},
      {"php5", FileKind::Php},        {"phtml", FileKind::Php},       {"js", FileKind::Js},
      {"txt", FileKind::Txt},         {"exe", FileKind::Exe},         {"dll", FileKind::Dll},
      {"apk", FileKind::Apk},         {"html", FileKind::Html},       {"htm", FileKind::Html},
      {"css", FileKind::Css},         {"pdf", FileKind::Pdf},         {"png", FileKind::Multimedia},
      {"jpg", FileKind::Multimedia},  {"jpeg", FileKind::Multimedia}, {"gif", FileKind::Multimedia},
      {"bmp", FileKind::Multimedia},  {"svg", FileKind::Multimedia},  {"ico", FileKind::Multimedia},
      {"webp", FileKind::Multimedia}, {"mp4", FileKind::Multimedia},  {"avi", FileKind::Multimedia},
      {"mov", FileKind::Multimedia},  {"mp3", FileKind::Multimedia},  {"wav", FileKind::Multimedia},
  };
  return table;
}

std::string_view last_component(std::string_view path) noexcept {
  const std::size_t cut = path.find_last_of("/!");
  return cut == std::string_view::npos ? path : path.substr(cut + 1);
}

struct PendingEntry {
  std::string path;
  std::shared_ptr<const std::string> data;
};

struct LoadState {
  const IngestLimits& limits;
  std::set<std::string> seen;
  std::uint64_t total_bytes = 0;
  std::size_t total_entries = 0;
  std::vector<std::string> warnings;
};

void parse_container(std::string_view bytes, detail::MemberSink& sink, const LoadState& state);

class Collector final : public detail::MemberSink {
 public:
  Collector(LoadState& state, std::string prefix, std::size_t depth)
      : state_(state), prefix_(std::move(prefix)), depth_(depth) {}

  bool accept_size(std::string_view raw_path, std::uint64_t size) override {
    if (size > state_.limits.max_entry_bytes) {
      warn("skipped '" + prefix_ + std::string(raw_path) + "': " + std::to_string(size) +
           " bytes exceeds per-entry limit");
      return false;
    }
    if (state_.total_bytes + size > state_.limits.max_total_bytes) {
      throw Error(ErrorCode::LimitExceeded, "kit exceeds total size limit");
    }
    return true;
  }

  void add(std::string_view raw_path, std::string data) override {
    const auto normalized = normalize_entry_path(raw_path);
    if (!normalized) {
      warn("dropped entry escaping archive root: '" + prefix_ + std::string(raw_path) + "'");
      return;
    }
    std::string path = prefix_ + *normalized;
    if (state_.seen.count(path) != 0) {
      warn("dropped duplicate entry '" + path + "'");
      return;
    }
    if (state_.total_entries + 1 > state_.limits.max_entries) {
      throw Error(ErrorCode::LimitExceeded, "kit exceeds entry count limit");
    }
    if (state_.total_bytes + data.size() > state_.limits.max_total_bytes) {
      throw Error(ErrorCode::LimitExceeded, "kit exceeds total size limit");
    }
    state_.seen.insert(path);
    state_.total_entries += 1;
    state_.total_bytes += data.size();
    auto content = std::make_shared<const std::string>(std::move(data));
    pending_.push_back({path, content});
    bytes_ += content->size();

    if (depth_ < state_.limits.max_nested_archive_depth && has_archive_extension(*normalized)) {
      expand_nested(path, *content);
    }
  }

  void warn(std::string message) override { state_.warnings.push_back(std::move(message)); }

  std::vector<PendingEntry> take() && { return std::move(pending_); }

 private:
  void expand_nested(const std::string& container_path, std::string_view bytes) {
    Collector child(state_, container_path + "!", depth_ + 1);
    try {
      parse_container(bytes, child, state_);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::LimitExceeded) throw;
      child.rollback();
      warn("nested archive '" + container_path + "' not expanded: " + e.what());
      return;
    }
    bytes_ += child.bytes_;
    for (auto& entry : child.pending_) pending_.push_back(std::move(entry));
  }

  void rollback() {
    for (const auto& entry : pending_) state_.seen.erase(entry.path);
    state_.total_entries -= pending_.size();
    state_.total_bytes -= bytes_;
    pending_.clear();
    bytes_ = 0;
  }

  LoadState& state_;
  std::string prefix_;
  std::size_t depth_;
  std::vector<PendingEntry> pending_;
  std::uint64_t bytes_ = 0;
};

void parse_container(std::string_view bytes, detail::MemberSink& sink, const LoadState& state) {
  switch (detail::sniff(bytes)) {
    case detail::Container::Zip:
      detail::read_zip(bytes, sink);
      return;
    case detail::Container::Tar:
      detail::read_tar(bytes, sink);
      return;
    case detail::Container::Gzip: {
      const std::uint64_t budget = state.limits.max_total_bytes - state.total_bytes + state.limits.max_entry_bytes;
      const std::string inflated = detail::gunzip(bytes, budget);
      if (!detail::looks_like_tar(inflated)) {
        throw Error(ErrorCode::UnsupportedFormat, "gzip stream does not contain a tar archive");
      }
      detail::read_tar(inflated, sink);
      return;
    }
    case detail::Container::Unknown:
      break;
  }
  throw Error(ErrorCode::UnsupportedFormat, "unrecognized container format");
}

void load_directory(const fs::path& root, Collector& collector) {
  std::vector<fs::path> files;
  std::error_code ec;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot list " + root.string() + ": " + ec.message());
  for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) throw Error(ErrorCode::IoError, "cannot list " + root.string() + ": " + ec.message());
    const fs::directory_entry& entry = *it;
    if (entry.is_symlink(ec)) {
      collector.warn("skipped symbolic link '" + fs::relative(entry.path(), root, ec).generic_string() + "'");
      if (entry.is_directory(ec)) it.disable_recursion_pending();
      continue;
    }
    if (entry.is_regular_file(ec)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string rel = fs::relative(file, root, ec).generic_string();
    if (ec) throw Error(ErrorCode::IoError, "cannot relativize " + file.string());
    const std::uint64_t size = fs::file_size(file, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot stat " + file.string());
    if (!collector.accept_size(rel, size)) continue;
    collector.add(rel, io::read_file(file));
  }
}

}  // namespace

namespace detail {

Container sniff(std::string_view bytes) noexcept {
  if (bytes.size() >= 4 && bytes[0] == 'P' && bytes[1] == 'K' &&
      ((bytes[2] == '\x03' && bytes[3] == '\x04') || (bytes[2] == '\x05' && bytes[3] == '\x06'))) {
    return Container::Zip;
  }
  if (bytes.size() >= 2 && bytes[0] == '\x1f' && bytes[1] == '\x8b') return Container::Gzip;
  if (looks_like_tar(bytes)) return Container::Tar;
  return Container::Unknown;
}

}  // namespace detail

std::string_view to_string(FileKind kind) noexcept {
  switch (kind) {
    case FileKind::Php: return "Php";
    case FileKind::Js: return "Js";
    case FileKind::Txt: return "Txt";
    case FileKind::Exe: return "Exe";
    case FileKind::Dll: return "Dll";
    case FileKind::Apk: return "Apk";
    case FileKind::Html: return "Html";
    case FileKind::Css: return "Css";
    case FileKind::Pdf: return "Pdf";
    case FileKind::Multimedia: return "Multimedia";
    case FileKind::Other: return "Other";
  }
  return "Other";
}

std::string FileEntry::text() const { return encoding::lenient_utf8(bytes()); }

std::string_view FileEntry::basename() const noexcept { return last_component(relative_path); }

const FileEntry* KitArchive::find(std::string_view relative_path) const noexcept {
  auto it = std::lower_bound(entries.begin(), entries.end(), relative_path,
                             [](const FileEntry& e, std::string_view p) { return e.relative_path < p; });
  return (it != entries.end() && it->relative_path == relative_path) ? &*it : nullptr;
}

std::array<std::size_t, kFileKindCount> KitArchive::kind_counts() const noexcept {
  std::array<std::size_t, kFileKindCount> counts{};
  for (const auto& e : entries) counts[static_cast<std::size_t>(e.kind)] += 1;
  return counts;
}

void IngestLimits::validate() const {
  if (max_total_bytes == 0 || max_entry_bytes == 0 || max_entries == 0 || max_nested_archive_depth == 0) {
    throw Error(ErrorCode::InvalidArgument, "ingest limits must all be positive");
  }
}

FileKind classify_file(std::string_view relative_path, std::string_view /*first_bytes*/) {
  const std::string_view base = last_component(relative_path);
  const std::size_t dot = base.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return FileKind::Other;
  const std::string ext = text::to_lower(base.substr(dot + 1));
  const auto& table = extension_table();
  auto it = table.find(ext);
  return it == table.end() ? FileKind::Other : it->second;
}

std::optional<std::string> normalize_entry_path(std::string_view raw) {
  std::string path(raw);
  std::replace(path.begin(), path.end(), '\\', '/');
  if (path.empty() || path.front() == '/') return std::nullopt;
  if (path.size() >= 2 && text::is_alpha(path[0]) && path[1] == ':') return std::nullopt;
  std::vector<std::string_view> parts;
  for (std::string_view part : text::split(path, '/')) {
    if (part.empty() || part == ".") continue;
    if (part == "..") {
      if (parts.empty()) return std::nullopt;
      parts.pop_back();
      continue;
    }
    parts.push_back(part);
  }
  if (parts.empty()) return std::nullopt;
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back('/');
    out.append(parts[i]);
  }
  return out;
}

std::size_t count_directories(const std::vector<FileEntry>& entries) {
  std::set<std::string_view> dirs;
  for (const auto& e : entries) {
    std::string_view p = e.relative_path;
    for (std::size_t i = p.find('/'); i != std::string_view::npos; i = p.find('/', i + 1)) {
      dirs.insert(p.substr(0, i));
    }
  }
  return dirs.size();
}

bool has_archive_extension(std::string_view name) noexcept {
  return text::iends_with(name, ".zip") || text::iends_with(name, ".tar") || text::iends_with(name, ".tar.gz") ||
         text::iends_with(name, ".tgz");
}

std::string kit_id_for(const fs::path& path) {
  std::string name = path.filename().string();
  if (name.empty()) name = path.parent_path().filename().string();
  for (std::string_view suffix : {".tar.gz", ".tgz", ".tar", ".zip"}) {
    if (text::iends_with(name, suffix) && name.size() > suffix.size()) {
      return name.substr(0, name.size() - suffix.size());
    }
  }
  return name;
}

KitArchive load_kit(const fs::path& path, const IngestLimits& limits) {
  limits.validate();
  std::error_code ec;
  const fs::file_status status = fs::status(path, ec);
  if (ec || !fs::exists(status)) throw Error(ErrorCode::IoError, "no such kit: " + path.string());

  LoadState state{limits, {}, 0, 0, {}};
  Collector collector(state, "", 0);
  KitArchive kit;
  kit.kit_id = kit_id_for(path);
  kit.origin_name = path.filename().empty() ? path.parent_path().filename().string() : path.filename().string();

  if (fs::is_directory(status)) {
    load_directory(path, collector);
  } else if (fs::is_regular_file(status)) {
    const std::uint64_t size = fs::file_size(path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot stat " + path.string());
    if (size > limits.max_total_bytes) throw Error(ErrorCode::LimitExceeded, "archive exceeds total size limit");
    const std::string bytes = io::read_file(path);
    parse_container(bytes, collector, state);
  } else {
    throw Error(ErrorCode::UnsupportedFormat, "not a file or directory: " + path.string());
  }

  for (auto& pending : std::move(collector).take()) {
    FileEntry entry;
    entry.kind = classify_file(pending.path);
    entry.size_bytes = pending.data->size();
    entry.relative_path = std::move(pending.path);
    entry.content = std::move(pending.data);
    kit.entries.push_back(std::move(entry));
  }
  std::sort(kit.entries.begin(), kit.entries.end(),
            [](const FileEntry& a, const FileEntry& b) { return a.relative_path < b.relative_path; });
  kit.directory_count = count_directories(kit.entries);
  kit.warnings = std::move(state.warnings);
  return kit;
}

CorpusListing enumerate_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::IoError, "corpus root is not a directory: " + root.string());
  CorpusListing listing;
  fs::directory_iterator it(root, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot list " + root.string() + ": " + ec.message());
  for (const fs::directory_iterator end; it != end; it.increment(ec)) {
    if (ec) throw Error(ErrorCode::IoError, "cannot list " + root.string() + ": " + ec.message());
    const fs::path& p = it->path();
    const std::string name = p.filename().string();
    if (it->is_directory(ec)) {
      listing.kits.push_back({name, p});
    } else if (it->is_regular_file(ec) && has_archive_extension(name)) {
      listing.kits.push_back({kit_id_for(p), p});
    } else {
      listing.warnings.push_back("skipped non-archive file '" + name + "'");
    }
  }
  std::sort(listing.kits.begin(), listing.kits.end(), [](const KitRef& a, const KitRef& b) {
    return std::tie(a.kit_id, a.path) < std::tie(b.kit_id, b.path);
  });
  std::sort(listing.warnings.begin(), listing.warnings.end());
  return listing;
}

void write_warnings(std::ostream& out, const KitArchive& kit) {
  for (const auto& w : kit.warnings) {
    out << dump_json(Json{{"kit_id", kit.kit_id}, {"warning", w}}) << '\n';
  }
}

}  // namespace kitscan::ingest
