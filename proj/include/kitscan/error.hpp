#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kitscan {

enum class ErrorCode {
  UnsupportedFormat,
  LimitExceeded,
  CorruptArchive,
  EncryptedArchive,
  IoError,
  RegistryLoadError,
  DegenerateDataset,
  DimensionMismatch,
  VersionMismatch,
  MalformedModel,
  EmptyTestSet,
  KitIdMismatch,
  MissingExclusion,
  MalformedMatrix,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so the
// CLI can map it onto an exit status and a machine-readable failure record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kitscan
