#include "kitscan/pipeline.hpp"

#include <variant>

#include "kitscan/php_lexer.hpp"
#include "kitscan/support/parallel.hpp"

namespace kitscan::pipeline {

ScanConfig ScanConfig::load(const ConfigPaths& paths) {
  ScanConfig cfg;
  cfg.evasion = evasion::Config::load(paths.watchlist);
  cfg.registry = obfuscation::Registry::load(paths.fingerprints);
  cfg.features = features::Config::load(paths.brands);
  return cfg;
}

features::LabeledSample KitScan::sample() const {
  features::LabeledSample s;
  s.kit_id = kit_id;
  s.features = features;
  s.labels = labels;
  for (const auto& sig : signatures) s.signatures.push_back(sig.name);
  return s;
}

KitScan scan_archive(const ingest::KitArchive& kit, const ScanConfig& cfg) {
  const auto bundle = php::analyze_php(kit);
  KitScan s;
  s.kit_id = kit.kit_id;
  s.warnings = kit.warnings;
  s.evasion = evasion::detect_evasion(kit, bundle, cfg.evasion);
  s.obfuscation = obfuscation::detect_obfuscation(kit, bundle, cfg.registry, cfg.obfuscation);
  s.signatures = authors::extract_signatures(kit, bundle, cfg.keywords);
  s.features = features::extract_features(kit, bundle, cfg.features);
  s.labels = features::label_kit(s.evasion, s.obfuscation);
  return s;
}

KitScan scan_kit(const std::filesystem::path& path, const ScanConfig& cfg) {
  return scan_archive(ingest::load_kit(path, cfg.limits), cfg);
}

CorpusScan scan_corpus(const std::filesystem::path& root, const ScanConfig& cfg, std::size_t jobs) {
  const auto listing = ingest::enumerate_corpus(root);
  std::vector<std::variant<KitScan, ScanFailure>> slots(listing.kits.size());
  parallel_for(listing.kits.size(), jobs, [&](std::size_t i) {
    const auto& ref = listing.kits[i];
    try {
      KitScan s = scan_kit(ref.path, cfg);
      s.kit_id = ref.kit_id;
      slots[i] = std::move(s);
    } catch (const Error& e) {
      slots[i] = ScanFailure{ref.kit_id, ref.path, e.code(), e.what()};
    } catch (const std::exception& e) {
      slots[i] = ScanFailure{ref.kit_id, ref.path, ErrorCode::IoError, e.what()};
    }
  });
  CorpusScan out;
  out.warnings = listing.warnings;
  for (auto& slot : slots) {
    if (auto* s = std::get_if<KitScan>(&slot)) out.kits.push_back(std::move(*s));
    else out.failures.push_back(std::move(std::get<ScanFailure>(slot)));
  }
  return out;
}

Json to_json(const KitScan& s) {
  Json sigs = Json::array();
  for (const auto& sig : s.signatures) sigs.push_back(authors::to_json(sig));
  return Json{{"schema_version", kScanSchemaVersion},
              {"kit_id", s.kit_id},
              {"is_evasive", s.labels.evasive},
              {"is_obfuscated", s.labels.obfuscated},
              {"evasion", evasion::to_json(s.evasion)},
              {"obfuscation", obfuscation::to_json(s.obfuscation)},
              {"signatures", std::move(sigs)},
              {"features", features::to_json(s.features)},
              {"warnings", s.warnings}};
}

Json to_json(const ScanFailure& f) {
  return Json{{"schema_version", kScanSchemaVersion},
              {"kit_id", f.kit_id},
              {"error", to_string(f.code)},
              {"message", f.message}};
}

}  // namespace kitscan::pipeline
