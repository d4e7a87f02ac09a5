#include <zlib.h>

#include <array>
#include <limits>

#include "formats.hpp"
#include "kitscan/error.hpp"

namespace kitscan::ingest::detail {

namespace {

class InflateStream {
 public:
  explicit InflateStream(int window_bits) {
    if (inflateInit2(&stream_, window_bits) != Z_OK) {
      throw Error(ErrorCode::CorruptArchive, "zlib initialisation failed");
    }
  }
  ~InflateStream() { inflateEnd(&stream_); }
  InflateStream(const InflateStream&) = delete;
  InflateStream& operator=(const InflateStream&) = delete;

  z_stream* get() { return &stream_; }

 private:
  z_stream stream_{};
};

void set_input(z_stream* zs, std::string_view input) {
  zs->next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
  zs->avail_in = static_cast<uInt>(input.size());
}

}  // namespace

std::string gunzip(std::string_view bytes, std::uint64_t max_output) {
  if (bytes.size() > std::numeric_limits<uInt>::max()) {
    throw Error(ErrorCode::LimitExceeded, "gzip input too large");
  }
  InflateStream stream(15 + 16);
  z_stream* zs = stream.get();
  set_input(zs, bytes);

  std::string out;
  std::array<char, 64 * 1024> chunk{};
  for (;;) {
    zs->next_out = reinterpret_cast<Bytef*>(chunk.data());
    zs->avail_out = static_cast<uInt>(chunk.size());
    int rc = inflate(zs, Z_NO_FLUSH);
    const std::size_t produced = chunk.size() - zs->avail_out;
    if (out.size() + produced > max_output) {
      throw Error(ErrorCode::LimitExceeded, "decompressed stream exceeds size limit");
    }
    out.append(chunk.data(), produced);
    if (rc == Z_STREAM_END) {
      // Concatenated gzip members are legal; trailing zero padding is not a member.
      bool only_padding = true;
      for (uInt i = 0; i < zs->avail_in; ++i) {
        if (zs->next_in[i] != 0) { only_padding = false; break; }
      }
      if (zs->avail_in == 0 || only_padding) return out;
      if (inflateReset(zs) != Z_OK) throw Error(ErrorCode::CorruptArchive, "gzip reset failed");
      continue;
    }
    if (rc == Z_BUF_ERROR && zs->avail_in == 0) {
      throw Error(ErrorCode::CorruptArchive, "truncated gzip stream");
    }
    if (rc != Z_OK && rc != Z_BUF_ERROR) {
      throw Error(ErrorCode::CorruptArchive, std::string("gzip stream error: ") + (zs->msg ? zs->msg : "unknown"));
    }
  }
}

std::string inflate_raw(std::string_view compressed, std::uint64_t expected) {
  if (compressed.size() > std::numeric_limits<uInt>::max()) {
    throw Error(ErrorCode::LimitExceeded, "deflate input too large");
  }
  InflateStream stream(-15);
  z_stream* zs = stream.get();
  set_input(zs, compressed);

  std::string out;
  out.reserve(static_cast<std::size_t>(expected));
  std::array<char, 64 * 1024> chunk{};
  for (;;) {
    zs->next_out = reinterpret_cast<Bytef*>(chunk.data());
    zs->avail_out = static_cast<uInt>(chunk.size());
    int rc = inflate(zs, Z_NO_FLUSH);
    const std::size_t produced = chunk.size() - zs->avail_out;
    if (out.size() + produced > expected) {
      throw Error(ErrorCode::CorruptArchive, "deflate output exceeds declared size");
    }
    out.append(chunk.data(), produced);
    if (rc == Z_STREAM_END) break;
    if (rc == Z_BUF_ERROR && zs->avail_in == 0) {
      throw Error(ErrorCode::CorruptArchive, "truncated deflate stream");
    }
    if (rc != Z_OK && rc != Z_BUF_ERROR) {
      throw Error(ErrorCode::CorruptArchive, std::string("deflate error: ") + (zs->msg ? zs->msg : "unknown"));
    }
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::CorruptArchive, "deflate output shorter than declared size");
  }
  return out;
}

}  // namespace kitscan::ingest::detail
