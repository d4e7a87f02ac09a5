#include "kitscan/evasion.hpp"

#include <algorithm>

#include "kitscan/support/io.hpp"
#include "kitscan/support/text.hpp"

namespace kitscan::evasion {

namespace {

using text::iequals;
using text::istarts_with;

// Lowercased, whitespace runs collapsed, no spaces around commas.
std::string normalize_directive(std::string_view line) {
  std::string out;
  bool space = false;
  for (char c : line) {
    if (text::is_space(c)) {
      space = true;
      continue;
    }
    if (space && !out.empty() && out.back() != ',' && c != ',') out.push_back(' ');
    space = false;
    out.push_back(text::ascii_lower(c));
  }
  return out;
}

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && text::is_space(line[i])) ++i;
    const std::size_t b = i;
    while (i < line.size() && !text::is_space(line[i])) ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

bool rewrite_redirects(std::string_view normalized) {
  const auto w = words(normalized);
  if (w.size() < 3 || w[0] != "rewriterule") return false;
  if (istarts_with(w[2], "http")) return true;
  if (w.size() < 4) return false;
  std::string_view flags = w[3];
  if (flags.size() < 2 || flags.front() != '[' || flags.back() != ']') return false;
  flags = flags.substr(1, flags.size() - 2);
  for (std::string_view f : text::split(flags, ',')) {
    f = text::trim(f);
    if (f == "r" || f == "redirect" || f.starts_with("r=") || f.starts_with("redirect=")) return true;
  }
  return false;
}

bool error_document_redirects(std::string_view normalized) {
  const auto w = words(normalized);
  return w.size() >= 3 && w[0] == "errordocument" && (w[1] == "403" || w[1] == "404") &&
         istarts_with(w[2], "http");
}

std::string_view classify_htaccess_line(std::string_view normalized, bool file_mentions_deny) {
  if (normalized.starts_with("deny from")) return "forbid.deny_from";
  if (normalized.starts_with("require not")) return "forbid.require_not";
  if (normalized.starts_with("order allow,deny")) return "forbid.order_allow_deny";
  if (normalized.starts_with("setenvif") && file_mentions_deny) return "forbid.setenvif_deny";
  if (normalized.starts_with("redirectmatch")) return "redirect.redirectmatch";
  if (normalized.starts_with("redirect ")) return "redirect.redirect";
  if (rewrite_redirects(normalized)) return "redirect.rewrite_r";
  if (error_document_redirects(normalized)) return "redirect.errordocument";
  return {};
}

bool contains_watchlisted(std::string_view element, const std::vector<std::string>& watchlist) {
  return std::any_of(watchlist.begin(), watchlist.end(),
                     [&](const std::string& k) { return !k.empty() && text::icontains(element, k); });
}

bool is_absolute_location(std::string_view literal) {
  const std::string_view t = text::trim(literal);
  return istarts_with(t, "location:") && (text::icontains(t, "http://") || text::icontains(t, "https://"));
}

}  // namespace

std::string_view to_string(Technique t) noexcept {
  switch (t) {
    case Technique::Htaccess: return "htaccess";
    case Technique::RobotsTxt: return "robots";
    case Technique::Php: return "php";
  }
  return "php";
}

std::vector<std::string> Config::default_watchlist() {
  return {"google", "phishtank", "netcraft", "kaspersky", "mcafee", "avast", "crawler", "spider", "bot"};
}

Config Config::load(const std::optional<std::filesystem::path>& watchlist_path) {
  Config cfg;
  if (const auto path = io::config_file(watchlist_path, "watchlist.txt")) {
    cfg.watchlist.clear();
    for (auto& w : text::parse_word_list(io::read_file(*path))) cfg.watchlist.push_back(text::to_lower(w));
  }
  return cfg;
}

bool is_ipv4_or_cidr(std::string_view s) noexcept {
  std::string_view addr = s;
  const std::size_t slash = s.find('/');
  if (slash != std::string_view::npos) {
    const std::string_view prefix = s.substr(slash + 1);
    if (prefix.empty() || prefix.size() > 2) return false;
    int bits = 0;
    for (char c : prefix) {
      if (!text::is_digit(c)) return false;
      bits = bits * 10 + (c - '0');
    }
    if (bits > 32) return false;
    addr = s.substr(0, slash);
  }
  int octets = 0;
  std::size_t i = 0;
  while (true) {
    const std::size_t b = i;
    int value = 0;
    while (i < addr.size() && text::is_digit(addr[i]) && i - b < 3) value = value * 10 + (addr[i++] - '0');
    if (i == b || value > 255) return false;
    ++octets;
    if (i == addr.size()) break;
    if (addr[i] != '.' || octets == 4) return false;
    ++i;
  }
  return octets == 4;
}

bool is_hostname(std::string_view s) noexcept {
  if (s.empty() || s.size() > 253) return false;
  if (s.back() == '.') s.remove_suffix(1);
  const auto labels = text::split(s, '.');
  if (labels.size() < 2) return false;
  for (std::string_view label : labels) {
    if (label.empty() || label.size() > 63 || label.front() == '-' || label.back() == '-') return false;
    for (char c : label) {
      if (!text::is_alnum(c) && c != '-') return false;
    }
  }
  const std::string_view tld = labels.back();
  if (tld.size() < 2 || !std::all_of(tld.begin(), tld.end(), [](char c) { return text::is_alpha(c); })) return false;
  // "index.php" is a file name, not a host.
  static constexpr std::string_view kFileSuffixes[] = {"php", "html", "htm", "js", "css", "txt", "png", "jpg", "jpeg",
                                                       "gif", "svg", "ico", "json", "xml", "zip", "phtml", "log"};
  return std::none_of(std::begin(kFileSuffixes), std::end(kFileSuffixes),
                      [&](std::string_view ext) { return iequals(tld, ext); });
}

Detection detect_htaccess(const ingest::KitArchive& kit) {
  Detection d;
  for (const auto& entry : kit.entries) {
    if (!iequals(entry.basename(), ".htaccess")) continue;
    const std::string content = entry.text();
    const auto lines = text::split_lines(content);
    std::vector<std::string> normalized;
    bool mentions_deny = false;
    for (std::string_view line : lines) {
      const std::string_view t = text::trim(line);
      normalized.push_back(t.starts_with('#') ? std::string() : normalize_directive(t));
      if (normalized.back().find("deny") != std::string::npos && !normalized.back().starts_with("setenvif")) {
        mentions_deny = true;
      }
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (normalized[i].empty()) continue;
      const std::string_view rule = classify_htaccess_line(normalized[i], mentions_deny);
      if (rule.empty()) continue;
      d.flag = true;
      d.evidence.push_back(make_evidence(entry.relative_path, i + 1, std::string(rule), lines[i]));
    }
  }
  return d;
}

Detection detect_robots(const ingest::KitArchive& kit) {
  Detection d;
  for (const auto& entry : kit.entries) {
    if (!iequals(entry.basename(), "robots.txt")) continue;
    const std::string content = entry.text();
    const auto lines = text::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string_view t = lines[i];
      if (const auto hash = t.find('#'); hash != std::string_view::npos) t = t.substr(0, hash);
      t = text::trim(t);
      if (!istarts_with(t, "disallow:")) continue;
      if (text::trim(t.substr(9)).empty()) continue;
      d.flag = true;
      d.evidence.push_back(make_evidence(entry.relative_path, i + 1, "robots.disallow", lines[i]));
    }
  }
  return d;
}

Detection detect_php_evasion(const php::PhpAnalysisBundle& bundle, const Config& config) {
  Detection d;
  const auto cite = [&](const std::string& file, std::size_t line, std::string rule) {
    d.flag = true;
    d.evidence.push_back(make_evidence(file, line, std::move(rule), bundle.source_line(file, line)));
  };
  for (const auto& array : bundle.string_arrays) {
    std::size_t ips = 0, hosts = 0;
    bool watchlisted = false;
    for (const auto& e : array.elements) {
      const std::string_view v = text::trim(e);
      if (is_ipv4_or_cidr(v)) ++ips;
      else if (is_hostname(v)) ++hosts;
      watchlisted = watchlisted || contains_watchlisted(v, config.watchlist);
    }
    if (ips >= config.blacklist_threshold) cite(array.file, array.line, "php.ip_blacklist");
    if (hosts >= config.blacklist_threshold) cite(array.file, array.line, "php.host_blacklist");
    if (watchlisted) cite(array.file, array.line, "php.watchlist");
  }
  for (const auto& call : bundle.call_sites) {
    if (call.callee == "http_redirect") {
      cite(call.file, call.line, "php.http_redirect");
    } else if (call.callee == "header") {
      const bool absolute = std::any_of(call.arg_literals.begin(), call.arg_literals.end(),
                                        [](const php::StringLiteral& l) { return is_absolute_location(l.decoded); });
      if (absolute) cite(call.file, call.line, "php.redirect_header");
    }
  }
  return d;
}

EvasionReport detect_evasion(const ingest::KitArchive& kit, const php::PhpAnalysisBundle& bundle,
                             const Config& config) {
  EvasionReport report;
  const Detection parts[] = {detect_htaccess(kit), detect_robots(kit), detect_php_evasion(bundle, config)};
  for (std::size_t i = 0; i < 3; ++i) {
    report.flags[i] = parts[i].flag;
    report.evidence.insert(report.evidence.end(), parts[i].evidence.begin(), parts[i].evidence.end());
  }
  report.is_evasive = std::find(report.flags.begin(), report.flags.end(), true) != report.flags.end();
  return report;
}

Json to_json(const EvasionReport& report) {
  Json flags = Json::object();
  for (Technique t : kTechniques) flags[std::string(to_string(t))] = report.flag(t);
  Json evidence = Json::array();
  for (const auto& e : report.evidence) evidence.push_back(to_json(e));
  return Json{{"is_evasive", report.is_evasive}, {"techniques", flags}, {"evidence", evidence}};
}

}  // namespace kitscan::evasion
