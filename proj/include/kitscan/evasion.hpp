#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/evidence.hpp"
#include "kitscan/ingest.hpp"
#include "kitscan/php_lexer.hpp"

namespace kitscan::evasion {

enum class Technique { Htaccess, RobotsTxt, Php };

inline constexpr std::array<Technique, 3> kTechniques = {Technique::Htaccess, Technique::RobotsTxt, Technique::Php};

std::string_view to_string(Technique t) noexcept;

struct Config {
  std::vector<std::string> watchlist = default_watchlist();
  std::size_t blacklist_threshold = 3;

  static std::vector<std::string> default_watchlist();
  // Reads the watchlist from `path` or $KITSCAN_CONFIG_DIR/watchlist.txt when
  // either exists; otherwise keeps the defaults.
  static Config load(const std::optional<std::filesystem::path>& watchlist_path = std::nullopt);
};

struct Detection {
  bool flag = false;
  std::vector<Evidence> evidence;
};

struct EvasionReport {
  std::array<bool, 3> flags{};
  std::vector<Evidence> evidence;
  bool is_evasive = false;

  bool flag(Technique t) const noexcept { return flags[static_cast<std::size_t>(t)]; }
};

// Strict dotted-quad with an optional /0-32 suffix.
bool is_ipv4_or_cidr(std::string_view s) noexcept;
// Two or more DNS labels, alphabetic TLD, not an address.
bool is_hostname(std::string_view s) noexcept;

Detection detect_htaccess(const ingest::KitArchive& kit);
Detection detect_robots(const ingest::KitArchive& kit);
Detection detect_php_evasion(const php::PhpAnalysisBundle& bundle, const Config& config = {});
EvasionReport detect_evasion(const ingest::KitArchive& kit, const php::PhpAnalysisBundle& bundle,
                             const Config& config = {});

Json to_json(const EvasionReport& report);

}  // namespace kitscan::evasion
