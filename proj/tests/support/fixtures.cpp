#include "fixtures.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <unistd.h>

namespace fs = std::filesystem;

namespace kitscan::testing {

namespace {

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string raw_deflate(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit2 failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  if (deflate(&zs, Z_FINISH) != Z_STREAM_END) throw std::runtime_error("deflate failed");
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

std::string octal(std::uint64_t value, std::size_t width) {
  std::string s(width - 1, '0');
  for (std::size_t i = width - 1; i-- > 0;) {
    s[i] = static_cast<char>('0' + (value & 7));
    value >>= 3;
  }
  return s;
}

}  // namespace

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("kitscan-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + std::to_string(rd()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path TempDir::write(const std::string& relative, std::string_view content) const {
  const fs::path p = path_ / relative;
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  return p;
}

std::string make_zip(const std::vector<ArchiveMember>& members, const ZipOptions& options) {
  std::string out;
  std::string central;
  for (const auto& m : members) {
    const auto offset = static_cast<std::uint32_t>(out.size());
    std::uint32_t crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(m.data.data()),
                              static_cast<uInt>(m.data.size()));
    if (options.corrupt_crc) crc ^= 0xDEADBEEF;
    const std::string payload = options.deflate ? raw_deflate(m.data) : m.data;
    const std::uint16_t method = options.deflate ? 8 : 0;
    const std::uint16_t flags = options.encrypted_flag ? 1 : 0;

    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, flags);
    put16(out, method);
    put16(out, 0);
    put16(out, 0);
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(payload.size()));
    put32(out, static_cast<std::uint32_t>(m.data.size()));
    put16(out, static_cast<std::uint16_t>(m.name.size()));
    put16(out, 0);
    out += m.name;
    out += payload;

    put32(central, 0x02014b50);
    put16(central, 20);
    put16(central, 20);
    put16(central, flags);
    put16(central, method);
    put16(central, 0);
    put16(central, 0);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(payload.size()));
    put32(central, static_cast<std::uint32_t>(m.data.size()));
    put16(central, static_cast<std::uint16_t>(m.name.size()));
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += m.name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(members.size()));
  put16(out, static_cast<std::uint16_t>(members.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::string make_tar(const std::vector<ArchiveMember>& members) {
  std::string out;
  for (const auto& m : members) {
    std::string header(512, '\0');
    std::copy_n(m.name.begin(), std::min<std::size_t>(m.name.size(), 100), header.begin());
    const std::string mode = octal(0644, 8), size = octal(m.data.size(), 12), mtime = octal(0, 12);
    std::copy(mode.begin(), mode.end(), header.begin() + 100);
    std::copy(mode.begin(), mode.end(), header.begin() + 108);
    std::copy(mode.begin(), mode.end(), header.begin() + 116);
    std::copy(size.begin(), size.end(), header.begin() + 124);
    std::copy(mtime.begin(), mtime.end(), header.begin() + 136);
    header[156] = '0';
    const std::string magic = "ustar";
    std::copy(magic.begin(), magic.end(), header.begin() + 257);
    header[263] = '0';
    header[264] = '0';
    std::fill(header.begin() + 148, header.begin() + 156, ' ');
    unsigned sum = 0;
    for (unsigned char c : header) sum += c;
    const std::string chk = octal(sum, 7);
    std::copy(chk.begin(), chk.end(), header.begin() + 148);
    header[155] = ' ';
    out += header;
    out += m.data;
    out.append((512 - m.data.size() % 512) % 512, '\0');
  }
  out.append(1024, '\0');
  return out;
}

std::string make_gzip(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit2 failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())) + 32, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  if (deflate(&zs, Z_FINISH) != Z_STREAM_END) throw std::runtime_error("gzip deflate failed");
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

std::vector<std::pair<std::string, std::string>> snapshot_tree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    files.emplace_back(fs::relative(entry.path(), root).generic_string(), std::move(data));
  }
  std::sort(files.begin(), files.end());
  return files;
}

ingest::KitArchive make_kit(const std::vector<std::pair<std::string, std::string>>& files, std::string kit_id) {
  ingest::KitArchive kit;
  kit.kit_id = kit_id;
  kit.origin_name = std::move(kit_id);
  for (const auto& [path, content] : files) {
    ingest::FileEntry e;
    e.relative_path = path;
    e.kind = ingest::classify_file(path);
    e.size_bytes = content.size();
    e.content = std::make_shared<const std::string>(content);
    kit.entries.push_back(std::move(e));
  }
  std::sort(kit.entries.begin(), kit.entries.end(),
            [](const auto& a, const auto& b) { return a.relative_path < b.relative_path; });
  kit.directory_count = ingest::count_directories(kit.entries);
  return kit;
}

}  // namespace kitscan::testing
