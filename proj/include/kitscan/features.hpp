#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/evasion.hpp"
#include "kitscan/ingest.hpp"
#include "kitscan/obfuscation.hpp"
#include "kitscan/php_lexer.hpp"

namespace kitscan::features {

inline constexpr std::size_t kFeatureCount = 43;
// Bumped whenever column order or meaning changes.
inline constexpr int kMatrixVersion = 1;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "nFiles",          "nDir",           "nPhp",          "nJs",           "nTxt",
    "nExe",            "nDll",           "nApk",          "nHtml",         "nCss",
    "nPdf",            "nMul",           "Otherfiles",    "htaccess",      "robots_txt",
    "admin",           "config",         "wordpress",     "laravel",       "code_ign",
    "zend",            "httrack",        "api_call",      "array_hostnames", "array_ipaddresses",
    "form_validation", "deceiving_url",  "deceiving_zipname", "read_file", "redirection",
    "random_file",     "random_dir",     "$_SERVER",      "$_GET",         "$_POST",
    "$_FILES",         "$_REQUEST",      "$_SESSION",     "$_ENV",         "$_COOKIE",
    "mail",            "bot_telegram",   "write",
};

// Column index by name, or nullopt.
std::optional<std::size_t> feature_index(std::string_view name) noexcept;

struct FeatureVector {
  std::array<std::int64_t, kFeatureCount> values{};

  std::int64_t operator[](std::size_t i) const noexcept { return values[i]; }
  std::int64_t get(std::string_view name) const;  // throws InvalidArgument on unknown names
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// The eight per-technique label columns: three evasion then five obfuscation.
enum class LabelTechnique { EvHtaccess, EvRobots, EvPhp, ObUrlDecode, ObEval, ObHex, ObBase64, ObObfuscator };

inline constexpr std::size_t kTechniqueCount = 8;
inline constexpr std::array<std::string_view, kTechniqueCount> kTechniqueColumns = {
    "ev_htaccess", "ev_robots", "ev_php", "ob_urldecode", "ob_eval", "ob_hex", "ob_base64", "ob_obfuscator"};
// Short names accepted on the command line: htaccess, robots, php, urldecode, ...
inline constexpr std::array<std::string_view, kTechniqueCount> kTechniqueShortNames = {
    "htaccess", "robots", "php", "urldecode", "eval", "hex", "base64", "obfuscator"};

std::optional<LabelTechnique> parse_technique(std::string_view name) noexcept;
std::string_view short_name(LabelTechnique t) noexcept;
bool is_evasion_technique(LabelTechnique t) noexcept;

struct Labels {
  bool evasive = false;
  bool obfuscated = false;
  std::array<bool, kTechniqueCount> techniques{};

  bool has(LabelTechnique t) const noexcept { return techniques[static_cast<std::size_t>(t)]; }
  friend bool operator==(const Labels&, const Labels&) = default;
};

struct LabeledSample {
  std::string kit_id;
  FeatureVector features;
  Labels labels;
  std::vector<std::string> signatures;
};

struct Config {
  std::vector<std::string> brands = default_brands();

  static std::vector<std::string> default_brands();
  // Explicit path, else $KITSCAN_CONFIG_DIR/brands.txt, else defaults.
  static Config load(const std::optional<std::filesystem::path>& brands_path = std::nullopt);
};

FeatureVector extract_features(const ingest::KitArchive& kit, const php::PhpAnalysisBundle& bundle,
                               const Config& config = {});

Labels label_kit(const evasion::EvasionReport& evasion, const obfuscation::ObfuscationReport& obfuscation);

// CSV: kit_id, 43 features, evasive, obfuscated, 8 technique columns. Rows
// keep the given order. Throws InvalidArgument on an empty sample set.
std::string matrix_csv(const std::vector<LabeledSample>& samples);
void export_matrix(const std::vector<LabeledSample>& samples, const std::filesystem::path& destination);

// Inverse of matrix_csv (signatures are not stored). Throws MalformedMatrix.
std::vector<LabeledSample> parse_matrix(std::string_view csv);
std::vector<LabeledSample> import_matrix(const std::filesystem::path& source);

Json to_json(const FeatureVector& v);
Json to_json(const Labels& l);

}  // namespace kitscan::features
