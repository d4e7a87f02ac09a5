#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace kitscan::ingest::detail {

enum class Container { Zip, Tar, Gzip, Unknown };

Container sniff(std::string_view bytes) noexcept;
bool looks_like_tar(std::string_view bytes) noexcept;

// Receives archive members in archive order. Paths are raw (unnormalized).
class MemberSink {
 public:
  virtual ~MemberSink() = default;
  // Asked before any data is materialized; returning false skips the member.
  virtual bool accept_size(std::string_view raw_path, std::uint64_t size) = 0;
  virtual void add(std::string_view raw_path, std::string data) = 0;
  virtual void warn(std::string message) = 0;
};

// Throw Error{CorruptArchive} / Error{EncryptedArchive}.
void read_zip(std::string_view bytes, MemberSink& sink);
void read_tar(std::string_view bytes, MemberSink& sink);

// Inflates a (possibly multi-member) gzip stream. Throws LimitExceeded when
// the output would exceed `max_output`, CorruptArchive on stream errors.
std::string gunzip(std::string_view bytes, std::uint64_t max_output);

// Inflates a raw deflate stream expected to produce exactly `expected` bytes.
std::string inflate_raw(std::string_view compressed, std::uint64_t expected);

}  // namespace kitscan::ingest::detail
