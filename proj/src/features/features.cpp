#include "kitscan/features.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "kitscan/error.hpp"
#include "kitscan/support/io.hpp"
#include "kitscan/support/text.hpp"

namespace kitscan::features {

namespace {

using ingest::FileKind;

std::size_t idx(std::string_view name) {
  const auto i = feature_index(name);
  if (!i) throw Error(ErrorCode::InvalidArgument, "unknown feature " + std::string(name));
  return *i;
}

bool has_call(const php::PhpAnalysisBundle& b, std::initializer_list<std::string_view> names) {
  return std::any_of(b.call_sites.begin(), b.call_sites.end(), [&](const php::CallSite& c) {
    return std::find(names.begin(), names.end(), c.callee) != names.end();
  });
}

template <typename Pred>
bool any_call(const php::PhpAnalysisBundle& b, Pred pred) {
  return std::any_of(b.call_sites.begin(), b.call_sites.end(), pred);
}

bool any_literal(const php::CallSite& c, auto pred) {
  return std::any_of(c.arg_literals.begin(), c.arg_literals.end(),
                     [&](const php::StringLiteral& l) { return pred(std::string_view(l.decoded)); });
}

// "r", "rb", "w+", "ab" ... as passed to fopen.
bool is_mode(std::string_view s, char first) {
  if (s.empty() || s.size() > 3 || text::ascii_lower(s[0]) != first) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) { return c == 'b' || c == 't' || c == '+'; });
}

// Path components, treating the nested-archive separator like a directory.
std::vector<std::string_view> components(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  for (std::size_t i = 0; i <= path.size(); ++i) {
    if (i == path.size() || path[i] == '/' || path[i] == '!') {
      if (i > b) out.push_back(path.substr(b, i - b));
      b = i + 1;
    }
  }
  return out;
}

bool statement_calls(const php::PhpAnalysisBundle& b, std::size_t statement,
                     std::initializer_list<std::string_view> names) {
  const auto& callees = b.statements[statement].callees;
  return std::any_of(names.begin(), names.end(), [&](std::string_view n) { return callees.count(std::string(n)) > 0; });
}

bool is_text_kind(FileKind k) {
  return k == FileKind::Php || k == FileKind::Js || k == FileKind::Html || k == FileKind::Txt;
}

void append_csv_field(std::string& out, std::string_view field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!field.empty() && (text::is_space(field.front()) || text::is_space(field.back())));
  if (!quote) {
    out.append(field);
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  const auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (i < csv.size()) {
    const char c = csv[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < csv.size() && csv[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      end_row();
      if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw Error(ErrorCode::MalformedMatrix, "unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string header_line() {
  std::string h = "kit_id";
  for (auto n : kFeatureNames) (h += ',') += n;
  h += ",evasive,obfuscated";
  for (auto n : kTechniqueColumns) (h += ',') += n;
  return h;
}

}  // namespace

std::optional<std::size_t> feature_index(std::string_view name) noexcept {
  const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
  if (it == kFeatureNames.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kFeatureNames.begin());
}

std::int64_t FeatureVector::get(std::string_view name) const { return values[idx(name)]; }

std::optional<LabelTechnique> parse_technique(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    if (text::iequals(name, kTechniqueShortNames[i]) || text::iequals(name, kTechniqueColumns[i])) {
      return static_cast<LabelTechnique>(i);
    }
  }
  return std::nullopt;
}

std::string_view short_name(LabelTechnique t) noexcept { return kTechniqueShortNames[static_cast<std::size_t>(t)]; }

bool is_evasion_technique(LabelTechnique t) noexcept { return static_cast<std::size_t>(t) < 3; }

std::vector<std::string> Config::default_brands() {
  return {"paypal", "apple", "amazon", "chase", "office", "netflix", "microsoft", "outlook", "wellsfargo",
          "bankofamerica", "dropbox", "docusign", "adobe", "facebook", "instagram", "linkedin", "dhl", "ebay"};
}

Config Config::load(const std::optional<std::filesystem::path>& brands_path) {
  Config cfg;
  if (const auto path = io::config_file(brands_path, "brands.txt")) {
    cfg.brands.clear();
    for (auto& b : text::parse_word_list(io::read_file(*path))) cfg.brands.push_back(text::to_lower(b));
  }
  return cfg;
}

FeatureVector extract_features(const ingest::KitArchive& kit, const php::PhpAnalysisBundle& bundle,
                               const Config& config) {
  FeatureVector v;
  auto set = [&](std::string_view name, std::int64_t value) { v.values[idx(name)] = value; };
  auto flag = [&](std::string_view name, bool value) { set(name, value ? 1 : 0); };

  const auto counts = kit.kind_counts();
  set("nFiles", static_cast<std::int64_t>(kit.entries.size()));
  set("nDir", static_cast<std::int64_t>(kit.directory_count));
  constexpr std::pair<FileKind, std::string_view> kKindColumns[] = {
      {FileKind::Php, "nPhp"}, {FileKind::Js, "nJs"},   {FileKind::Txt, "nTxt"},        {FileKind::Exe, "nExe"},
      {FileKind::Dll, "nDll"}, {FileKind::Apk, "nApk"}, {FileKind::Html, "nHtml"},      {FileKind::Css, "nCss"},
      {FileKind::Pdf, "nPdf"}, {FileKind::Multimedia, "nMul"}, {FileKind::Other, "Otherfiles"}};
  for (const auto& [kind, name] : kKindColumns) set(name, static_cast<std::int64_t>(counts[static_cast<std::size_t>(kind)]));

  bool htaccess = false, robots = false, admin = false, configish = false;
  bool wp_path = false, artisan = false, ci_layout = false, zend_dir = false;
  std::set<std::string> top_dirs;
  for (const auto& e : kit.entries) {
    const auto base = e.basename();
    htaccess = htaccess || text::iequals(base, ".htaccess");
    robots = robots || text::iequals(base, "robots.txt");
    artisan = artisan || base == "artisan";
    wp_path = wp_path || text::iequals(base, "wp-config.php");
    const auto parts = components(e.relative_path);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      admin = admin || text::iequals(parts[i], "admin");
      configish = configish || text::icontains(parts[i], "config");
      const bool is_dir = i + 1 < parts.size();
      if (!is_dir) continue;
      wp_path = wp_path || text::iequals(parts[i], "wp-content");
      zend_dir = zend_dir || parts[i] == "Zend";
      ci_layout = ci_layout || (text::iequals(parts[i], "system") && text::iequals(parts[i + 1], "core") && i + 2 < parts.size());
    }
    if (e.relative_path.find('/') != std::string::npos) top_dirs.insert(std::string(parts.front()));
  }
  flag("htaccess", htaccess);
  flag("robots_txt", robots);
  flag("admin", admin);
  flag("config", configish);

  bool wp_marker = false, laravel_marker = false, ci_marker = false, zend_marker = false, httrack = false,
       telegram = false;
  for (const auto& e : kit.entries) {
    if (!is_text_kind(e.kind)) continue;
    const std::string t = e.text();
    wp_marker = wp_marker || text::icontains(t, "content=\"WordPress");
    laravel_marker = laravel_marker || t.find("Laravel") != std::string::npos;
    ci_marker = ci_marker || t.find("CodeIgniter") != std::string::npos;
    zend_marker = zend_marker || t.find("Zend Framework") != std::string::npos;
    httrack = httrack || (t.find("Mirrored from") != std::string::npos && t.find("HTTrack") != std::string::npos);
    telegram = telegram || text::icontains(t, "api.telegram.org/bot");
  }
  flag("wordpress", wp_path || wp_marker);
  flag("laravel", artisan || laravel_marker);
  flag("code_ign", ci_layout || ci_marker);
  flag("zend", zend_dir || zend_marker);
  flag("httrack", httrack);

  flag("api_call", any_call(bundle, [](const php::CallSite& c) {
         if (c.callee == "curl_init" || c.callee == "curl_exec" || c.callee == "fsockopen") return true;
         return c.callee == "file_get_contents" &&
                any_literal(c, [](std::string_view s) { return text::istarts_with(text::trim(s), "http"); });
       }));

  bool hosts = false, ips = false;
  for (const auto& a : bundle.string_arrays) {
    for (const auto& el : a.elements) {
      const auto t = text::trim(el);
      ips = ips || evasion::is_ipv4_or_cidr(t);
      hosts = hosts || evasion::is_hostname(t);
    }
  }
  flag("array_hostnames", hosts);
  flag("array_ipaddresses", ips);

  flag("form_validation", any_call(bundle, [&](const php::CallSite& c) {
         return (c.callee == "filter_var" || c.callee == "preg_match") &&
                !bundle.statements[c.statement].superglobals.empty();
       }));

  const auto brand_in = [&](std::string_view s) {
    return std::any_of(config.brands.begin(), config.brands.end(),
                       [&](const std::string& b) { return !b.empty() && text::icontains(s, b); });
  };
  flag("deceiving_url", std::any_of(top_dirs.begin(), top_dirs.end(), [&](const std::string& d) { return brand_in(d); }));
  flag("deceiving_zipname", brand_in(kit.origin_name));

  flag("read_file", any_call(bundle, [](const php::CallSite& c) {
         if (c.callee == "file_get_contents" || c.callee == "fread" || c.callee == "readfile") return true;
         return c.callee == "fopen" && any_literal(c, [](std::string_view s) { return is_mode(s, 'r'); });
       }));
  flag("write", any_call(bundle, [](const php::CallSite& c) {
         if (c.callee == "fwrite" || c.callee == "file_put_contents") return true;
         return c.callee == "fopen" &&
                any_literal(c, [](std::string_view s) { return is_mode(s, 'w') || is_mode(s, 'a'); });
       }));
  flag("redirection", any_call(bundle, [](const php::CallSite& c) {
         return c.callee == "header" &&
                any_literal(c, [](std::string_view s) { return text::istarts_with(text::trim(s), "location:"); });
       }));
  flag("random_file", any_call(bundle, [&](const php::CallSite& c) {
         return (c.callee == "fopen" || c.callee == "file_put_contents") &&
                statement_calls(bundle, c.statement, {"rand", "mt_rand", "uniqid", "md5"});
       }));
  flag("random_dir", any_call(bundle, [&](const php::CallSite& c) {
         return c.callee == "mkdir" && statement_calls(bundle, c.statement, {"rand", "mt_rand", "uniqid", "md5"});
       }));

  for (std::string_view sg : php::kSuperglobals) flag(sg, bundle.superglobals_used.count(std::string(sg)) > 0);
  flag("mail", has_call(bundle, {"mail"}));
  flag("bot_telegram", telegram);
  return v;
}

Labels label_kit(const evasion::EvasionReport& ev, const obfuscation::ObfuscationReport& ob) {
  Labels l;
  for (std::size_t i = 0; i < 3; ++i) l.techniques[i] = ev.flags[i];
  for (std::size_t i = 0; i < 5; ++i) l.techniques[3 + i] = ob.flags[i];
  l.evasive = std::any_of(l.techniques.begin(), l.techniques.begin() + 3, [](bool b) { return b; });
  l.obfuscated = std::any_of(l.techniques.begin() + 3, l.techniques.end(), [](bool b) { return b; });
  return l;
}

std::string matrix_csv(const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "feature matrix needs at least one sample");
  std::string out = header_line();
  out += '\n';
  for (const auto& s : samples) {
    append_csv_field(out, s.kit_id);
    for (auto v : s.features.values) (out += ',') += std::to_string(v);
    out += s.labels.evasive ? ",1" : ",0";
    out += s.labels.obfuscated ? ",1" : ",0";
    for (bool t : s.labels.techniques) out += t ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

void export_matrix(const std::vector<LabeledSample>& samples, const std::filesystem::path& destination) {
  io::write_file(destination, matrix_csv(samples));
}

std::vector<LabeledSample> parse_matrix(std::string_view csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty()) throw Error(ErrorCode::MalformedMatrix, "empty matrix");
  const std::string header_text = header_line();
  const auto expected = text::split(header_text, ',');
  const auto& header = rows.front();
  if (header.size() != expected.size() || !std::equal(header.begin(), header.end(), expected.begin())) {
    throw Error(ErrorCode::MalformedMatrix, "header does not match the 43-feature layout (version " +
                                                std::to_string(kMatrixVersion) + ")");
  }
  std::vector<LabeledSample> out;
  std::set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    const std::string where = "row " + std::to_string(r + 1);
    if (row.size() != expected.size()) throw Error(ErrorCode::MalformedMatrix, where + ": wrong column count");
    LabeledSample s;
    s.kit_id = row[0];
    if (s.kit_id.empty()) throw Error(ErrorCode::MalformedMatrix, where + ": empty kit_id");
    if (!ids.insert(s.kit_id).second) throw Error(ErrorCode::MalformedMatrix, where + ": duplicate kit_id " + s.kit_id);
    const auto number = [&](std::size_t col) {
      std::int64_t v = 0;
      const auto& f = row[col];
      const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || v < 0) {
        throw Error(ErrorCode::MalformedMatrix, where + ": bad value in column " + std::string(expected[col]));
      }
      return v;
    };
    const auto boolean = [&](std::size_t col) {
      const auto v = number(col);
      if (v > 1) throw Error(ErrorCode::MalformedMatrix, where + ": flag column must be 0 or 1");
      return v == 1;
    };
    for (std::size_t i = 0; i < kFeatureCount; ++i) s.features.values[i] = number(1 + i);
    s.labels.evasive = boolean(1 + kFeatureCount);
    s.labels.obfuscated = boolean(2 + kFeatureCount);
    for (std::size_t i = 0; i < kTechniqueCount; ++i) s.labels.techniques[i] = boolean(3 + kFeatureCount + i);
    const auto& t = s.labels.techniques;
    if (s.labels.evasive != (t[0] || t[1] || t[2]) || s.labels.obfuscated != (t[3] || t[4] || t[5] || t[6] || t[7])) {
      throw Error(ErrorCode::MalformedMatrix, where + ": label columns disagree with technique columns");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSample> import_matrix(const std::filesystem::path& source) {
  return parse_matrix(io::read_file(source));
}

Json to_json(const FeatureVector& v) {
  Json j = Json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) j[std::string(kFeatureNames[i])] = v.values[i];
  return j;
}

Json to_json(const Labels& l) {
  Json techniques = Json::object();
  for (std::size_t i = 0; i < kTechniqueCount; ++i) techniques[std::string(kTechniqueColumns[i])] = l.techniques[i];
  return Json{{"evasive", l.evasive}, {"obfuscated", l.obfuscated}, {"techniques", techniques}};
}

}  // namespace kitscan::features
