#include <cstdint>
#include <optional>
#include <string>

#include "formats.hpp"
#include "kitscan/error.hpp"
#include "kitscan/support/encoding.hpp"

namespace kitscan::ingest::detail {

namespace {

constexpr std::size_t kBlock = 512;

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::CorruptArchive, "tar: " + what);
}

std::string_view field(std::string_view header, std::size_t offset, std::size_t len) {
  std::string_view f = header.substr(offset, len);
  const std::size_t nul = f.find('\0');
  return nul == std::string_view::npos ? f : f.substr(0, nul);
}

std::optional<std::uint64_t> parse_number(std::string_view raw) {
  if (!raw.empty() && (static_cast<unsigned char>(raw[0]) & 0x80) != 0) {
    // GNU base-256 encoding; negative values are rejected.
    if ((static_cast<unsigned char>(raw[0]) & 0x40) != 0) return std::nullopt;
    std::uint64_t v = static_cast<unsigned char>(raw[0]) & 0x3F;
    for (std::size_t i = 1; i < raw.size(); ++i) {
      if (v > (UINT64_MAX >> 8)) return std::nullopt;
      v = (v << 8) | static_cast<unsigned char>(raw[i]);
    }
    return v;
  }
  std::uint64_t v = 0;
  bool any = false;
  for (char c : raw) {
    if (c == '\0') break;
    if (c == ' ') {
      if (any) break;
      continue;
    }
    if (c < '0' || c > '7') return std::nullopt;
    if (v > (UINT64_MAX >> 3)) return std::nullopt;
    v = (v << 3) | static_cast<std::uint64_t>(c - '0');
    any = true;
  }
  return v;
}

bool checksum_ok(std::string_view header) {
  const auto stored = parse_number(header.substr(148, 8));
  if (!stored) return false;
  std::uint64_t unsigned_sum = 0;
  std::int64_t signed_sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    const bool in_field = i >= 148 && i < 156;
    const unsigned char u = in_field ? ' ' : static_cast<unsigned char>(header[i]);
    unsigned_sum += u;
    signed_sum += in_field ? ' ' : static_cast<signed char>(header[i]);
  }
  return *stored == unsigned_sum || static_cast<std::int64_t>(*stored) == signed_sum;
}

bool all_zero(std::string_view block) {
  for (char c : block) {
    if (c != '\0') return false;
  }
  return true;
}

// Extracts the "path" record from a pax extended header.
std::optional<std::string> pax_path(std::string_view data) {
  std::optional<std::string> path;
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t space = data.find(' ', pos);
    if (space == std::string_view::npos) break;
    std::size_t len = 0;
    for (std::size_t i = pos; i < space; ++i) {
      if (data[i] < '0' || data[i] > '9') return path;
      len = len * 10 + static_cast<std::size_t>(data[i] - '0');
    }
    if (len == 0 || pos + len > data.size()) break;
    std::string_view record = data.substr(space + 1, pos + len - space - 1);
    if (!record.empty() && record.back() == '\n') record.remove_suffix(1);
    const std::size_t eq = record.find('=');
    if (eq != std::string_view::npos && record.substr(0, eq) == "path") {
      path = std::string(record.substr(eq + 1));
    }
    pos += len;
  }
  return path;
}

}  // namespace

bool looks_like_tar(std::string_view bytes) noexcept {
  if (bytes.size() < kBlock) return false;
  std::string_view header = bytes.substr(0, kBlock);
  if (header.substr(257, 5) == "ustar") return true;
  if (all_zero(header)) return false;
  return checksum_ok(header);
}

void read_tar(std::string_view bytes, MemberSink& sink) {
  std::size_t pos = 0;
  std::optional<std::string> long_name;
  std::optional<std::string> pax_name;

  while (pos + kBlock <= bytes.size()) {
    std::string_view header = bytes.substr(pos, kBlock);
    if (all_zero(header)) return;
    if (!checksum_ok(header)) corrupt("header checksum mismatch at offset " + std::to_string(pos));
    const auto size = parse_number(header.substr(124, 12));
    if (!size) corrupt("bad size field at offset " + std::to_string(pos));
    const char type = header[156];
    pos += kBlock;
    if (*size > bytes.size() - pos) corrupt("member data truncated");
    const std::string_view data = bytes.substr(pos, static_cast<std::size_t>(*size));
    pos += static_cast<std::size_t>((*size + kBlock - 1) / kBlock * kBlock);
    if (pos > bytes.size()) pos = bytes.size();

    if (type == 'L') {
      std::string_view name = data;
      const std::size_t nul = name.find('\0');
      if (nul != std::string_view::npos) name = name.substr(0, nul);
      long_name = std::string(name);
      continue;
    }
    if (type == 'x') {
      pax_name = pax_path(data);
      continue;
    }
    if (type == 'g' || type == 'K') continue;

    std::string name;
    if (pax_name) {
      name = *pax_name;
    } else if (long_name) {
      name = *long_name;
    } else {
      const std::string_view prefix = field(header, 345, 155);
      const std::string_view base = field(header, 0, 100);
      const bool ustar = header.substr(257, 5) == "ustar";
      name = (ustar && !prefix.empty()) ? std::string(prefix) + "/" + std::string(base) : std::string(base);
    }
    pax_name.reset();
    long_name.reset();
    name = encoding::lenient_utf8(name);

    if (type == '0' || type == '\0' || type == '7') {
      if (!name.empty() && name.back() == '/') continue;
      if (!sink.accept_size(name, *size)) continue;
      sink.add(name, std::string(data));
    } else if (type == '5') {
      continue;
    } else if (type == '1' || type == '2') {
      sink.warn("skipped link '" + name + "'");
    } else {
      sink.warn("skipped special member '" + name + "'");
    }
  }
  // Archives without the terminating zero blocks are tolerated; a partial
  // header block is not.
  if (pos < bytes.size() && !all_zero(bytes.substr(pos))) corrupt("trailing partial header");
}

}  // namespace kitscan::ingest::detail
