#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/features.hpp"
#include "kitscan/support/json.hpp"

namespace kitscan::synth {

struct AuthorWeight {
  std::string name;
  double weight = 1.0;
};

struct CorpusSpec {
  std::size_t kit_count = 200;
  // Indexed like features::LabelTechnique.
  std::array<double, features::kTechniqueCount> plant_probability{0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4};
  double near_miss_probability = 0.3;
  double signature_probability = 0.6;
  std::vector<AuthorWeight> authors = default_authors();
  std::size_t min_filler_files = 3, max_filler_files = 12;
  std::size_t min_dir_depth = 1, max_dir_depth = 3;
  // 0: style markers independent of labels; 1: strongly tied to them.
  double correlation_strength = 0.8;

  static std::vector<AuthorWeight> default_authors();
  // Throws InvalidArgument when a field is out of range.
  void validate() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static CorpusSpec from_json(const Json& j);
  static CorpusSpec load(const std::filesystem::path& path);
};

Json to_json(const CorpusSpec& spec);

enum class TemplateRole { Base, Filler, Plant, NearMiss, Marker, Signature };

struct Template {
  std::string id;
  TemplateRole role = TemplateRole::Base;
  std::optional<features::LabelTechnique> technique;  // Plant, NearMiss
  bool evasive_family = false;                        // Marker
  std::string path;                                   // may hold placeholders
  std::string body;
};

struct TemplateSet {
  std::vector<Template> templates;
  std::vector<std::string> words;

  // The set compiled into the library from data/templates.
  static const TemplateSet& builtin();
  // index.json plus sources and words.txt from a directory. Throws IoError or
  // InvalidArgument.
  static TemplateSet load(const std::filesystem::path& dir);
};

struct KitRecord {
  std::string kit_id;
  std::array<bool, features::kTechniqueCount> planted{};
  std::array<bool, features::kTechniqueCount> near_misses{};
  std::optional<std::string> signature;
  std::size_t evasive_markers = 0, obfuscated_markers = 0;
  std::size_t files = 0, php_files = 0, directories = 0;

  bool evasive() const noexcept;
  bool obfuscated() const noexcept;
  bool near_miss_only() const noexcept;
};

struct Manifest {
  std::vector<KitRecord> kits;  // in kit_id order
};

// Writes destination/kits/<kit_id>/... and destination/manifest.jsonl.
// Refuses a destination whose kits/ directory is non-empty (IoError).
Manifest generate_corpus(const CorpusSpec& spec, std::uint64_t seed, const std::filesystem::path& destination,
                         const TemplateSet& templates = TemplateSet::builtin());

Json to_json(const KitRecord& r);
std::string manifest_jsonl(const Manifest& m);
Manifest parse_manifest(std::string_view jsonl);  // throws InvalidArgument
Manifest load_manifest(const std::filesystem::path& path);

struct TechniqueAgreement {
  std::size_t agree = 0;
  std::size_t total = 0;
  double rate() const noexcept { return total == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(total); }
};

struct Disagreement {
  std::string kit_id;
  features::LabelTechnique technique;
  bool expected = false;
  bool detected = false;
};

struct AgreementReport {
  std::array<TechniqueAgreement, features::kTechniqueCount> techniques{};
  std::vector<Disagreement> disagreements;
  std::size_t near_miss_only_kits = 0;
  std::vector<std::string> near_miss_false_positives;  // near-miss-only kits with any flag
  std::size_t signatures_planted = 0, signatures_found = 0;
};

// Throws KitIdMismatch unless scans and manifest cover the same kit ids.
AgreementReport verify_against_manifest(const std::vector<features::LabeledSample>& scans, const Manifest& manifest);

Json to_json(const AgreementReport& r);

}  // namespace kitscan::synth
