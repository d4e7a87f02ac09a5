#include "kitscan/authors.hpp"

#include <algorithm>
#include <map>

#include "kitscan/support/io.hpp"
#include "kitscan/support/text.hpp"

namespace kitscan::authors {

namespace {

bool is_word_char(char c) noexcept { return text::is_alnum(c) || c == '_'; }

bool is_name_char(char c) noexcept { return is_word_char(c) || c == '.' || c == '-'; }

bool is_trim_punct(char c) noexcept { return !text::is_alnum(c); }

constexpr std::string_view kStopwords[] = {
    "the",  "and",   "for",   "you",    "your",  "our",   "this",    "that",    "with",   "from",
    "admin", "user", "users", "default", "http", "https", "www",     "php",     "html",   "null",
    "true", "false", "none",  "unknown", "team", "system", "server", "client",  "google", "email",
    "name", "value", "using", "means",  "design", "itself", "someone", "nobody", "other", "all",
};

// Length of `keyword` matched at `p` (words separated by runs of blanks), or 0.
std::size_t match_keyword(std::string_view s, std::size_t p, std::string_view keyword) noexcept {
  std::size_t i = p;
  std::size_t k = 0;
  while (k < keyword.size()) {
    if (keyword[k] == ' ') {
      if (i >= s.size() || (s[i] != ' ' && s[i] != '\t')) return 0;
      while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
      while (k < keyword.size() && keyword[k] == ' ') ++k;
      continue;
    }
    if (i >= s.size() || text::ascii_lower(s[i]) != text::ascii_lower(keyword[k])) return 0;
    ++i;
    ++k;
  }
  return i - p;
}

struct Hit {
  std::string name;
  std::string keyword;
  std::size_t offset = 0;
};

std::vector<Hit> scan_text(std::string_view s, const std::vector<std::string>& keywords, bool allow_bare_by) {
  std::vector<Hit> hits;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (p > 0 && is_word_char(s[p - 1])) continue;
    for (const auto& kw : keywords) {
      if (!allow_bare_by && text::iequals(kw, "by")) continue;
      const std::size_t len = match_keyword(s, p, kw);
      if (len == 0) continue;
      std::size_t q = p + len;
      if (q < s.size() && is_word_char(s[q])) continue;
      while (q < s.size() && (s[q] == ' ' || s[q] == '\t' || s[q] == ':' || s[q] == '@')) ++q;
      const std::size_t b = q;
      while (q < s.size() && q - b < kMaxNameLength && is_name_char(s[q])) ++q;
      std::string name = normalize_name(s.substr(b, q - b));
      if (name.empty()) continue;
      hits.push_back({std::move(name), kw, p});
      break;
    }
  }
  return hits;
}

std::size_t line_of(std::string_view s, std::size_t offset) {
  return static_cast<std::size_t>(std::count(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::set<std::string> load_names(const std::optional<std::filesystem::path>& path, std::string_view name) {
  std::set<std::string> out;
  if (const auto file = io::config_file(path, name)) {
    for (const auto& n : text::parse_word_list(io::read_file(*file))) {
      std::string norm = normalize_name(n);
      if (!norm.empty()) out.insert(std::move(norm));
    }
  }
  return out;
}

}  // namespace

Curation Curation::load(const std::optional<std::filesystem::path>& allow_path,
                        const std::optional<std::filesystem::path>& deny_path) {
  return Curation{load_names(allow_path, "allowlist.txt"), load_names(deny_path, "denylist.txt")};
}

std::vector<std::string> default_keywords() {
  return {"coded by", "created by", "developed by", "made by", "hacked by", "spam by", "by"};
}

std::string normalize_name(std::string_view raw) {
  std::string s = text::to_lower(raw);
  std::size_t b = 0, e = s.size();
  while (b < e && is_trim_punct(s[b])) ++b;
  while (e > b && is_trim_punct(s[e - 1])) --e;
  s = s.substr(b, std::min(e - b, kMaxNameLength));
  while (!s.empty() && is_trim_punct(s.back())) s.pop_back();
  return s;
}

bool plausible_name(std::string_view name) {
  if (name.size() < 3) return false;
  if (std::all_of(name.begin(), name.end(), [](char c) { return text::is_digit(c) || !text::is_alnum(c); })) {
    return false;
  }
  return std::find(std::begin(kStopwords), std::end(kStopwords), name) == std::end(kStopwords);
}

std::vector<Signature> extract_signatures(const ingest::KitArchive& kit, const php::PhpAnalysisBundle& bundle,
                                          const std::vector<std::string>& keywords) {
  // Longer phrases first so "coded by" is credited rather than bare "by".
  std::vector<std::string> ordered = keywords;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });

  std::vector<Signature> out;
  std::set<std::string> seen;
  const auto take = [&](std::string_view s, bool bare_by, const std::string& file, std::size_t first_line) {
    for (auto& hit : scan_text(s, ordered, bare_by)) {
      if (!seen.insert(hit.name).second) continue;
      out.push_back({std::move(hit.name), std::move(hit.keyword), file, first_line + line_of(s, hit.offset)});
    }
  };
  for (const auto& c : bundle.comments) take(c.text, true, c.file, c.line);
  for (const auto& l : bundle.string_literals) take(l.raw, false, l.file, l.line);
  for (const auto& entry : kit.entries) {
    if (entry.kind != ingest::FileKind::Txt && entry.kind != ingest::FileKind::Html) continue;
    take(entry.text(), false, entry.relative_path, 1);
  }
  return out;
}

std::vector<Profile> build_author_profiles(const std::vector<KitSignatures>& kits, const Curation& curation) {
  std::map<std::string, Profile> by_name;
  for (const auto& kit : kits) {
    const std::set<std::string> names(kit.names.begin(), kit.names.end());
    for (const auto& raw : names) {
      const std::string name = normalize_name(raw);
      if (name.empty() || curation.deny.count(name) > 0) continue;
      if (curation.allow.count(name) == 0 && !plausible_name(name)) continue;
      Profile& p = by_name[name];
      p.name = name;
      ++p.kit_count;
      p.evasive_count += kit.evasive ? 1 : 0;
      p.obfuscated_count += kit.obfuscated ? 1 : 0;
    }
  }
  std::vector<Profile> out;
  for (auto& [name, p] : by_name) {
    p.evasive_rate = static_cast<double>(p.evasive_count) / static_cast<double>(p.kit_count);
    p.obfuscated_rate = static_cast<double>(p.obfuscated_count) / static_cast<double>(p.kit_count);
    out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(), [](const Profile& a, const Profile& b) {
    if (a.kit_count != b.kit_count) return a.kit_count > b.kit_count;
    return a.name < b.name;
  });
  return out;
}

Json to_json(const Signature& s) {
  return Json{{"name", s.name}, {"keyword", s.matched_keyword}, {"file", s.file}, {"line", s.line}};
}

Json to_json(const Profile& p) {
  return Json{{"name", p.name},
              {"kit_count", p.kit_count},
              {"evasive_count", p.evasive_count},
              {"obfuscated_count", p.obfuscated_count},
              {"evasive_rate", p.evasive_rate},
              {"obfuscated_rate", p.obfuscated_rate}};
}

}  // namespace kitscan::authors
