#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/evidence.hpp"
#include "kitscan/ingest.hpp"
#include "kitscan/php_lexer.hpp"

namespace kitscan::obfuscation {

enum class Technique { UrlDecode, Eval, Hex, Base64, ObfuscatorTool };

inline constexpr std::array<Technique, 5> kTechniques = {Technique::UrlDecode, Technique::Eval, Technique::Hex,
                                                         Technique::Base64, Technique::ObfuscatorTool};

std::string_view to_string(Technique t) noexcept;

struct Fingerprint {
  std::string tool_name;
  std::string pattern;  // Perl-syntax regular expression
  std::string description;
};

// Compiled obfuscator fingerprints, kept sorted by tool name so results do not
// depend on file order. Cheap to copy.
class Registry {
 public:
  Registry();  // empty

  // Parses a JSON array of {tool_name, pattern, description}. Throws
  // Error{RegistryLoadError} naming the offending entry.
  static Registry from_json(std::string_view json_text, std::string_view source = "registry");
  // Built-in seed registry (shipped data file).
  static const Registry& builtin();
  // Explicit path, then $KITSCAN_CONFIG_DIR/fingerprints.json, then builtin().
  static Registry load(const std::optional<std::filesystem::path>& path = std::nullopt);

  const std::vector<Fingerprint>& entries() const noexcept { return entries_; }
  // Byte offset of the first match of entry `index` in `text`.
  std::optional<std::size_t> search(std::size_t index, std::string_view text) const;

 private:
  struct Compiled;
  std::vector<Fingerprint> entries_;
  std::shared_ptr<const std::vector<Compiled>> compiled_;
};

struct Config {
  std::size_t percent_escape_threshold = 5;
  std::size_t hex_run_threshold = 8;
  std::size_t base64_min_length = 128;
};

struct Detection {
  bool flag = false;
  std::vector<Evidence> evidence;
};

struct ObfuscationReport {
  std::array<bool, 5> flags{};
  std::vector<Evidence> evidence;
  bool is_obfuscated = false;

  bool flag(Technique t) const noexcept { return flags[static_cast<std::size_t>(t)]; }
};

// Number of "%HH" escapes in `s`.
std::size_t count_percent_escapes(std::string_view s) noexcept;
// Longest run of adjacent "\xH" / "\xHH" escapes in a raw double-quoted body;
// escaped backslashes break a run.
std::size_t longest_hex_run(std::string_view raw) noexcept;
// Modifiers after the closing delimiter of a preg pattern, or nullopt.
std::optional<std::string> preg_modifiers(std::string_view pattern);

Detection detect_eval(const php::PhpAnalysisBundle& bundle);
Detection detect_urldecode(const php::PhpAnalysisBundle& bundle, const Config& config = {});
Detection detect_hex(const php::PhpAnalysisBundle& bundle, const Config& config = {});
Detection detect_base64(const php::PhpAnalysisBundle& bundle, const Config& config = {});
Detection detect_obfuscator(const ingest::KitArchive& kit, const Registry& registry = Registry::builtin());

ObfuscationReport detect_obfuscation(const ingest::KitArchive& kit, const php::PhpAnalysisBundle& bundle,
                                     const Registry& registry = Registry::builtin(), const Config& config = {});

Json to_json(const ObfuscationReport& report);

}  // namespace kitscan::obfuscation
