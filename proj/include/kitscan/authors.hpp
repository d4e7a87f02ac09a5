#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/ingest.hpp"
#include "kitscan/php_lexer.hpp"
#include "kitscan/support/json.hpp"

namespace kitscan::authors {

inline constexpr std::size_t kMaxNameLength = 40;

struct Signature {
  std::string name;  // normalized
  std::string matched_keyword;
  std::string file;
  std::size_t line = 0;
};

struct Profile {
  std::string name;
  std::size_t kit_count = 0;
  std::size_t evasive_count = 0;
  std::size_t obfuscated_count = 0;
  double evasive_rate = 0.0;
  double obfuscated_rate = 0.0;
};

// Per-kit input to profile building.
struct KitSignatures {
  std::string kit_id;
  std::vector<std::string> names;
  bool evasive = false;
  bool obfuscated = false;
};

// Manual curation as files: allowlisted names skip the heuristic filter,
// denylisted names are always dropped (deny wins over allow).
struct Curation {
  std::set<std::string> allow;
  std::set<std::string> deny;

  // Explicit paths, else $KITSCAN_CONFIG_DIR/{allowlist,denylist}.txt.
  static Curation load(const std::optional<std::filesystem::path>& allow_path = std::nullopt,
                       const std::optional<std::filesystem::path>& deny_path = std::nullopt);
};

// "coded by", "created by", "developed by", "made by", "hacked by", "spam by", "by".
std::vector<std::string> default_keywords();

// Lowercase, strip leading/trailing punctuation, cap at kMaxNameLength bytes.
std::string normalize_name(std::string_view raw);

// Rejects names that are too short, numeric-only or common words.
bool plausible_name(std::string_view normalized);

// Scans PHP comments and string literals plus every Txt/Html entry. Bare "by"
// only counts inside PHP comments. One signature per distinct name.
std::vector<Signature> extract_signatures(const ingest::KitArchive& kit, const php::PhpAnalysisBundle& bundle,
                                          const std::vector<std::string>& keywords = default_keywords());

// Sorted by kit_count descending, then name.
std::vector<Profile> build_author_profiles(const std::vector<KitSignatures>& kits, const Curation& curation = {});

Json to_json(const Signature& s);
Json to_json(const Profile& p);

}  // namespace kitscan::authors
