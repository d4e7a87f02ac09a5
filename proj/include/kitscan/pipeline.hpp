#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kitscan/authors.hpp"
#include "kitscan/error.hpp"
#include "kitscan/evasion.hpp"
#include "kitscan/features.hpp"
#include "kitscan/ingest.hpp"
#include "kitscan/obfuscation.hpp"
#include "kitscan/support/json.hpp"

namespace kitscan::pipeline {

inline constexpr int kScanSchemaVersion = 1;

struct ConfigPaths {
  std::optional<std::filesystem::path> watchlist, brands, fingerprints, allowlist, denylist;
};

struct ScanConfig {
  ingest::IngestLimits limits;
  evasion::Config evasion;
  obfuscation::Registry registry = obfuscation::Registry::builtin();
  obfuscation::Config obfuscation;
  features::Config features;
  std::vector<std::string> keywords = authors::default_keywords();

  // Explicit paths first, then $KITSCAN_CONFIG_DIR, then built-ins.
  static ScanConfig load(const ConfigPaths& paths = {});
};

struct KitScan {
  std::string kit_id;
  std::vector<std::string> warnings;
  evasion::EvasionReport evasion;
  obfuscation::ObfuscationReport obfuscation;
  std::vector<authors::Signature> signatures;
  features::FeatureVector features;
  features::Labels labels;

  features::LabeledSample sample() const;
};

struct ScanFailure {
  std::string kit_id;
  std::filesystem::path path;
  ErrorCode code = ErrorCode::IoError;
  std::string message;
};

struct CorpusScan {
  std::vector<KitScan> kits;          // kit_id order
  std::vector<ScanFailure> failures;  // kit_id order
  std::vector<std::string> warnings;  // listing warnings
};

KitScan scan_archive(const ingest::KitArchive& kit, const ScanConfig& cfg);
// Throws the ingest errors for unreadable kits.
KitScan scan_kit(const std::filesystem::path& path, const ScanConfig& cfg);
// Per-kit failures are collected, never thrown. Output order never depends
// on `jobs`.
CorpusScan scan_corpus(const std::filesystem::path& root, const ScanConfig& cfg, std::size_t jobs = 1);

Json to_json(const KitScan& s);
Json to_json(const ScanFailure& f);

}  // namespace kitscan::pipeline
