#include "kitscan/error.hpp"

namespace kitscan {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::LimitExceeded: return "LimitExceeded";
    case ErrorCode::CorruptArchive: return "CorruptArchive";
    case ErrorCode::EncryptedArchive: return "EncryptedArchive";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::RegistryLoadError: return "RegistryLoadError";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::KitIdMismatch: return "KitIdMismatch";
    case ErrorCode::MissingExclusion: return "MissingExclusion";
    case ErrorCode::MalformedMatrix: return "MalformedMatrix";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace kitscan
