#include <zlib.h>

#include <cstdint>
#include <string>

#include "formats.hpp"
#include "kitscan/error.hpp"
#include "kitscan/support/encoding.hpp"

namespace kitscan::ingest::detail {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDirSig = 0x06054b50;
constexpr std::uint32_t kZip64EndSig = 0x06064b50;
constexpr std::uint32_t kZip64LocatorSig = 0x07064b50;
constexpr std::size_t kEocdSize = 22;
constexpr std::size_t kCentralHeaderSize = 46;
constexpr std::size_t kLocalHeaderSize = 30;

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::CorruptArchive, "zip: " + what);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool has(std::uint64_t offset, std::uint64_t len) const noexcept {
    return offset <= bytes_.size() && len <= bytes_.size() - offset;
  }
  std::uint16_t u16(std::uint64_t off) const {
    need(off, 2);
    return static_cast<std::uint16_t>(byte(off) | (byte(off + 1) << 8));
  }
  std::uint32_t u32(std::uint64_t off) const {
    need(off, 4);
    return static_cast<std::uint32_t>(byte(off)) | (static_cast<std::uint32_t>(byte(off + 1)) << 8) |
           (static_cast<std::uint32_t>(byte(off + 2)) << 16) | (static_cast<std::uint32_t>(byte(off + 3)) << 24);
  }
  std::uint64_t u64(std::uint64_t off) const {
    return static_cast<std::uint64_t>(u32(off)) | (static_cast<std::uint64_t>(u32(off + 4)) << 32);
  }
  std::string_view slice(std::uint64_t off, std::uint64_t len) const {
    need(off, len);
    return bytes_.substr(static_cast<std::size_t>(off), static_cast<std::size_t>(len));
  }
  std::size_t size() const noexcept { return bytes_.size(); }

 private:
  void need(std::uint64_t off, std::uint64_t len) const {
    if (!has(off, len)) corrupt("structure extends past end of file");
  }
  unsigned byte(std::uint64_t off) const { return static_cast<unsigned char>(bytes_[static_cast<std::size_t>(off)]); }

  std::string_view bytes_;
};

struct Directory {
  std::uint64_t entries = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

Directory locate_directory(const Reader& r) {
  if (r.size() < kEocdSize) corrupt("too small for end-of-central-directory record");
  const std::size_t lowest = r.size() >= kEocdSize + 0xFFFF ? r.size() - kEocdSize - 0xFFFF : 0;
  std::size_t pos = r.size() - kEocdSize;
  for (;;) {
    if (r.u32(pos) == kEndOfCentralDirSig) break;
    if (pos == lowest) corrupt("end-of-central-directory record not found");
    --pos;
  }
  Directory dir;
  dir.entries = r.u16(pos + 10);
  dir.size = r.u32(pos + 12);
  dir.offset = r.u32(pos + 16);
  const bool needs_zip64 = dir.entries == 0xFFFF || dir.size == 0xFFFFFFFF || dir.offset == 0xFFFFFFFF;
  if (needs_zip64 && pos >= 20 && r.u32(pos - 20) == kZip64LocatorSig) {
    const std::uint64_t z64 = r.u64(pos - 20 + 8);
    if (r.u32(z64) != kZip64EndSig) corrupt("bad zip64 end record");
    dir.entries = r.u64(z64 + 32);
    dir.size = r.u64(z64 + 40);
    dir.offset = r.u64(z64 + 48);
  }
  if (!r.has(dir.offset, dir.size)) corrupt("central directory out of bounds");
  return dir;
}

// Applies the zip64 extended-information extra field to whichever header
// fields were saturated.
void apply_zip64_extra(std::string_view extra, std::uint64_t& usize, std::uint64_t& csize, std::uint64_t& offset) {
  Reader r(extra);
  std::uint64_t pos = 0;
  while (r.has(pos, 4)) {
    const std::uint16_t id = r.u16(pos);
    const std::uint16_t len = r.u16(pos + 2);
    if (!r.has(pos + 4, len)) return;
    if (id == 0x0001) {
      std::uint64_t p = pos + 4;
      const std::uint64_t end = pos + 4 + len;
      auto take = [&](std::uint64_t& field) {
        if (field == 0xFFFFFFFF && p + 8 <= end) {
          field = r.u64(p);
          p += 8;
        }
      };
      take(usize);
      take(csize);
      take(offset);
      return;
    }
    pos += 4 + len;
  }
}

}  // namespace

void read_zip(std::string_view bytes, MemberSink& sink) {
  const Reader r(bytes);
  const Directory dir = locate_directory(r);

  std::uint64_t pos = dir.offset;
  for (std::uint64_t n = 0; n < dir.entries; ++n) {
    if (r.u32(pos) != kCentralHeaderSig) corrupt("bad central directory signature");
    const std::uint16_t made_by = r.u16(pos + 4);
    const std::uint16_t flags = r.u16(pos + 8);
    const std::uint16_t method = r.u16(pos + 10);
    const std::uint32_t crc = r.u32(pos + 16);
    std::uint64_t csize = r.u32(pos + 20);
    std::uint64_t usize = r.u32(pos + 24);
    const std::uint16_t name_len = r.u16(pos + 28);
    const std::uint16_t extra_len = r.u16(pos + 30);
    const std::uint16_t comment_len = r.u16(pos + 32);
    const std::uint32_t external_attr = r.u32(pos + 38);
    std::uint64_t local_offset = r.u32(pos + 42);
    const std::string name = encoding::lenient_utf8(r.slice(pos + kCentralHeaderSize, name_len));
    apply_zip64_extra(r.slice(pos + kCentralHeaderSize + name_len, extra_len), usize, csize, local_offset);
    pos += kCentralHeaderSize + name_len + extra_len + comment_len;

    if (!name.empty() && (name.back() == '/' || name.back() == '\\')) continue;
    if ((flags & 0x1) != 0) {
      throw Error(ErrorCode::EncryptedArchive, "zip: encrypted entry '" + name + "'");
    }
    const unsigned host = made_by >> 8;
    const unsigned unix_type = (external_attr >> 16) & 0xF000;
    if (host == 3 && unix_type == 0xA000) {
      sink.warn("skipped symbolic link '" + name + "'");
      continue;
    }
    if (host == 3 && unix_type == 0x4000) continue;
    if (method != 0 && method != 8) {
      sink.warn("skipped '" + name + "': unsupported compression method " + std::to_string(method));
      continue;
    }
    if (!sink.accept_size(name, usize)) continue;

    if (r.u32(local_offset) != kLocalHeaderSig) corrupt("bad local header for '" + name + "'");
    const std::uint16_t local_name_len = r.u16(local_offset + 26);
    const std::uint16_t local_extra_len = r.u16(local_offset + 28);
    const std::uint64_t data_offset = local_offset + kLocalHeaderSize + local_name_len + local_extra_len;
    const std::string_view compressed = r.slice(data_offset, csize);

    std::string data;
    if (method == 0) {
      if (csize != usize) corrupt("stored entry size mismatch for '" + name + "'");
      data.assign(compressed);
    } else {
      data = inflate_raw(compressed, usize);
    }
    const uLong actual_crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data.data()),
                                   static_cast<uInt>(data.size()));
    if (actual_crc != crc) corrupt("CRC mismatch for '" + name + "'");
    sink.add(name, std::move(data));
  }
}

}  // namespace kitscan::ingest::detail
