#include <algorithm>
#include <map>
#include <set>

#include "kitscan/authors.hpp"
#include "kitscan/error.hpp"
#include "kitscan/ingest.hpp"
#include "kitscan/support/encoding.hpp"
#include "kitscan/support/io.hpp"
#include "kitscan/support/rng.hpp"
#include "kitscan/support/text.hpp"
#include "kitscan/synth.hpp"

namespace kitscan::synth {

namespace fs = std::filesystem;
using features::LabelTechnique;
using features::kTechniqueCount;

namespace {

constexpr std::string_view kHexDigits = "0123456789abcdef";
constexpr std::string_view kTlds[] = {"com", "net", "org", "info"};
constexpr char kPercentChars[] = {'<', '>', '/', ':', '?', '=', '&', '#', '@', ';'};

std::string random_bytes(Rng& rng, std::size_t n) {
  std::string out(n, '\0');
  for (auto& c : out) c = static_cast<char>(rng.index(256));
  return out;
}

std::string random_ip(Rng& rng) {
  std::int64_t first = rng.between(11, 223);
  if (first == 127) first = 128;
  return std::to_string(first) + "." + std::to_string(rng.between(0, 255)) + "." +
         std::to_string(rng.between(0, 255)) + "." + std::to_string(rng.between(1, 254));
}

std::string hex_escapes(Rng& rng, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<unsigned char>('a' + rng.index(26));
    out += "\\x";
    out += kHexDigits[c >> 4];
    out += kHexDigits[c & 15];
  }
  return out;
}

struct Context {
  Rng& rng;
  const std::vector<std::string>& words;
  std::string author;
  std::string dir;
};

std::string expand(std::string_view name, Context& ctx) {
  Rng& rng = ctx.rng;
  const auto word = [&] { return ctx.words[rng.index(ctx.words.size())]; };
  if (name == "WORD") return word();
  if (name == "NUM") return std::to_string(rng.between(1, 999));
  if (name == "IP") return random_ip(rng);
  if (name == "CIDR") {
    const std::string ip = random_ip(rng);
    return ip.substr(0, ip.rfind('.')) + ".0/" + std::to_string(rng.between(16, 30));
  }
  if (name == "HOST") return word() + "-" + word() + std::to_string(rng.between(1, 99)) + "." + std::string(kTlds[rng.index(4)]);
  if (name == "B64_PAYLOAD") return encoding::base64_encode(random_bytes(rng, static_cast<std::size_t>(rng.between(120, 180))));
  if (name == "B64_SHORT") return encoding::base64_encode(random_bytes(rng, 48));
  if (name == "HEX_NAME") return hex_escapes(rng, static_cast<std::size_t>(rng.between(8, 14)));
  if (name == "HEX_SHORT") return hex_escapes(rng, static_cast<std::size_t>(rng.between(2, 4)));
  if (name == "PCT") {
    std::string out;
    const auto n = rng.between(6, 10);
    for (std::int64_t i = 0; i < n; ++i) {
      out += static_cast<char>('a' + rng.index(26));
      const auto c = static_cast<unsigned char>(kPercentChars[rng.index(sizeof kPercentChars)]);
      out += '%';
      out += static_cast<char>(std::toupper(kHexDigits[c >> 4]));
      out += static_cast<char>(std::toupper(kHexDigits[c & 15]));
    }
    return out;
  }
  if (name == "BYTES") return random_bytes(rng, static_cast<std::size_t>(rng.between(64, 256)));
  if (name == "AUTHOR") return ctx.author;
  if (name == "DIR") return ctx.dir;
  throw Error(ErrorCode::InvalidArgument, "unknown template placeholder {{" + std::string(name) + "}}");
}

// Placeholders are drawn left to right, each occurrence independently.
std::string render(std::string_view s, Context& ctx) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t open = s.find("{{", i);
    if (open == std::string_view::npos) break;
    const std::size_t close = s.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(s.substr(i, open - i));
    out += expand(s.substr(open + 2, close - open - 2), ctx);
    i = close + 2;
  }
  out.append(s.substr(i));
  return out;
}

std::string clean_path(std::string p) {
  std::string out;
  for (char c : p) {
    if (c == '/' && (out.empty() || out.back() == '/')) continue;
    out += c;
  }
  while (!out.empty() && out.back() == '/') out.pop_back();
  return out;
}

class KitBuilder {
 public:
  void add(std::string path, std::string body) {
    path = clean_path(std::move(path));
    if (path.empty()) throw Error(ErrorCode::InvalidArgument, "template produced an empty path");
    auto it = files_.find(path);
    if (it == files_.end()) {
      files_.emplace(std::move(path), std::move(body));
      return;
    }
    if (text::iends_with(path, ".php")) {
      // PHP files are whole programs; a clash gets its own file.
      const std::string stem = path.substr(0, path.size() - 4);
      for (int k = 2;; ++k) {
        std::string alt = stem + "_" + std::to_string(k) + ".php";
        if (files_.count(alt) == 0) {
          files_.emplace(std::move(alt), std::move(body));
          return;
        }
      }
    }
    if (!it->second.empty() && it->second.back() != '\n') it->second += '\n';
    it->second += body;
  }

  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  std::map<std::string, std::string> files_;
};

std::vector<const Template*> by_role(const TemplateSet& set, TemplateRole role) {
  std::vector<const Template*> out;
  for (const auto& t : set.templates) {
    if (t.role == role) out.push_back(&t);
  }
  return out;
}

std::vector<const Template*> for_technique(const std::vector<const Template*>& list, LabelTechnique tech) {
  std::vector<const Template*> out;
  for (const auto* t : list) {
    if (t->technique == tech) out.push_back(t);
  }
  return out;
}

const Template* pick(Rng& rng, const std::vector<const Template*>& list) {
  return list[rng.index(list.size())];
}

std::string kit_name(std::size_t i, std::size_t count) {
  std::size_t width = 4;
  for (std::size_t n = count; n >= 10000; n /= 10) ++width;
  std::string num = std::to_string(i);
  return "kit_" + std::string(width > num.size() ? width - num.size() : 0, '0') + num;
}

std::size_t directory_count(const std::map<std::string, std::string>& files) {
  std::set<std::string> dirs;
  for (const auto& [path, body] : files) {
    for (std::size_t p = path.find('/'); p != std::string::npos; p = path.find('/', p + 1)) dirs.insert(path.substr(0, p));
  }
  return dirs.size();
}

std::vector<std::string> technique_names(const std::array<bool, kTechniqueCount>& flags) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    if (flags[i]) out.emplace_back(features::short_name(static_cast<LabelTechnique>(i)));
  }
  return out;
}

std::array<bool, kTechniqueCount> technique_flags(const Json& list, const std::string& kit) {
  std::array<bool, kTechniqueCount> out{};
  if (!list.is_array()) throw Error(ErrorCode::InvalidArgument, "manifest " + kit + ": technique list expected");
  for (const auto& e : list) {
    const auto t = e.is_string() ? features::parse_technique(e.get<std::string>()) : std::nullopt;
    if (!t) throw Error(ErrorCode::InvalidArgument, "manifest " + kit + ": unknown technique");
    out[static_cast<std::size_t>(*t)] = true;
  }
  return out;
}

}  // namespace

std::vector<AuthorWeight> CorpusSpec::default_authors() {
  return {{"xbalti", 8}, {"venza", 6}, {"medpage", 5}, {"l33bo", 4}, {"kr3pto", 3}, {"ex-robotos", 2}, {"zer0cool", 1}};
}

void CorpusSpec::validate() const {
  const auto prob = [](double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, what + " must be within [0,1]");
  };
  if (kit_count == 0) throw Error(ErrorCode::InvalidArgument, "kit_count must be at least 1");
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    prob(plant_probability[i], "plant probability for " + std::string(features::kTechniqueShortNames[i]));
  }
  prob(near_miss_probability, "near_miss_probability");
  prob(signature_probability, "signature_probability");
  prob(correlation_strength, "correlation_strength");
  if (min_filler_files > max_filler_files) throw Error(ErrorCode::InvalidArgument, "filler file range is inverted");
  if (min_dir_depth > max_dir_depth) throw Error(ErrorCode::InvalidArgument, "directory depth range is inverted");
  if (signature_probability > 0.0) {
    double total = 0.0;
    for (const auto& a : authors) {
      if (!(a.weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "author weights must be non-negative");
      if (authors::normalize_name(a.name) != a.name || !authors::plausible_name(a.name)) {
        throw Error(ErrorCode::InvalidArgument, "author name '" + a.name + "' would not survive signature extraction");
      }
      total += a.weight;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "signatures need at least one weighted author");
  }
}

CorpusSpec CorpusSpec::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "corpus spec must be a JSON object");
  CorpusSpec s;
  const auto number = [](const Json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, "corpus spec '" + key + "' must be a number");
    return v.get<double>();
  };
  const auto count = [](const Json& v, const std::string& key) {
    if (!v.is_number_unsigned()) throw Error(ErrorCode::InvalidArgument, "corpus spec '" + key + "' must be a count");
    return v.get<std::size_t>();
  };
  const auto range = [&](const Json& v, const std::string& key, std::size_t& lo, std::size_t& hi) {
    if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::InvalidArgument, "corpus spec '" + key + "' must be [min, max]");
    lo = count(v[0], key);
    hi = count(v[1], key);
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "kit_count") {
      s.kit_count = count(v, key);
    } else if (key == "plant_probability") {
      if (v.is_number()) {
        s.plant_probability.fill(number(v, key));
      } else if (v.is_object()) {
        for (const auto& [name, p] : v.items()) {
          const auto t = features::parse_technique(name);
          if (!t) throw Error(ErrorCode::InvalidArgument, "corpus spec: unknown technique '" + name + "'");
          s.plant_probability[static_cast<std::size_t>(*t)] = number(p, key);
        }
      } else {
        throw Error(ErrorCode::InvalidArgument, "corpus spec 'plant_probability' must be a number or object");
      }
    } else if (key == "near_miss_probability") {
      s.near_miss_probability = number(v, key);
    } else if (key == "signature_probability") {
      s.signature_probability = number(v, key);
    } else if (key == "correlation_strength") {
      s.correlation_strength = number(v, key);
    } else if (key == "filler_files") {
      range(v, key, s.min_filler_files, s.max_filler_files);
    } else if (key == "dir_depth") {
      range(v, key, s.min_dir_depth, s.max_dir_depth);
    } else if (key == "authors") {
      if (!v.is_array()) throw Error(ErrorCode::InvalidArgument, "corpus spec 'authors' must be an array");
      s.authors.clear();
      for (const auto& a : v) {
        if (!a.is_object() || !a.contains("name") || !a["name"].is_string()) {
          throw Error(ErrorCode::InvalidArgument, "corpus spec author entries need a name");
        }
        s.authors.push_back({a["name"].get<std::string>(), a.contains("weight") ? number(a["weight"], "weight") : 1.0});
      }
    } else {
      throw Error(ErrorCode::InvalidArgument, "corpus spec: unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

CorpusSpec CorpusSpec::load(const fs::path& path) {
  const std::string body = io::read_file(path);
  try {
    return from_json(Json::parse(body));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "corpus spec " + path.string() + " is not valid JSON: " + e.what());
  }
}

Json to_json(const CorpusSpec& s) {
  Json probs = Json::object();
  for (std::size_t i = 0; i < kTechniqueCount; ++i) probs[std::string(features::kTechniqueShortNames[i])] = s.plant_probability[i];
  Json authors = Json::array();
  for (const auto& a : s.authors) authors.push_back(Json{{"name", a.name}, {"weight", a.weight}});
  return Json{{"kit_count", s.kit_count},
              {"plant_probability", std::move(probs)},
              {"near_miss_probability", s.near_miss_probability},
              {"signature_probability", s.signature_probability},
              {"authors", std::move(authors)},
              {"filler_files", {s.min_filler_files, s.max_filler_files}},
              {"dir_depth", {s.min_dir_depth, s.max_dir_depth}},
              {"correlation_strength", s.correlation_strength}};
}

bool KitRecord::evasive() const noexcept { return planted[0] || planted[1] || planted[2]; }

bool KitRecord::obfuscated() const noexcept {
  return std::any_of(planted.begin() + 3, planted.end(), [](bool b) { return b; });
}

bool KitRecord::near_miss_only() const noexcept {
  return std::none_of(planted.begin(), planted.end(), [](bool b) { return b; }) &&
         std::any_of(near_misses.begin(), near_misses.end(), [](bool b) { return b; });
}

Manifest generate_corpus(const CorpusSpec& spec, std::uint64_t seed, const fs::path& destination,
                         const TemplateSet& templates) {
  spec.validate();
  const auto base = by_role(templates, TemplateRole::Base);
  const auto fillers = by_role(templates, TemplateRole::Filler);
  const auto plants = by_role(templates, TemplateRole::Plant);
  const auto near = by_role(templates, TemplateRole::NearMiss);
  const auto markers = by_role(templates, TemplateRole::Marker);
  const auto signatures = by_role(templates, TemplateRole::Signature);
  std::array<std::vector<const Template*>, kTechniqueCount> plant_for, near_for;
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    plant_for[i] = for_technique(plants, static_cast<LabelTechnique>(i));
    near_for[i] = for_technique(near, static_cast<LabelTechnique>(i));
    if (spec.plant_probability[i] > 0.0 && plant_for[i].empty()) {
      throw Error(ErrorCode::InvalidArgument, "no plant template for " + std::string(features::kTechniqueShortNames[i]));
    }
  }
  if (spec.max_filler_files > 0 && fillers.empty()) throw Error(ErrorCode::InvalidArgument, "no filler templates");
  if (spec.signature_probability > 0.0 && signatures.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no signature templates");
  }

  const fs::path kits_dir = destination / "kits";
  std::error_code ec;
  if (fs::exists(kits_dir, ec) && !fs::is_empty(kits_dir, ec)) {
    throw Error(ErrorCode::IoError, "refusing to generate into non-empty " + kits_dir.string());
  }
  fs::create_directories(kits_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + kits_dir.string() + ": " + ec.message());

  // Markers of the label's family appear with probability hi, otherwise lo.
  const double lo = 0.15;
  const double hi = lo + (0.9 - lo) * spec.correlation_strength;

  double total_weight = 0.0;
  for (const auto& a : spec.authors) total_weight += a.weight;

  Rng rng(seed);
  Manifest manifest;
  for (std::size_t k = 0; k < spec.kit_count; ++k) {
    KitRecord rec;
    rec.kit_id = kit_name(k, spec.kit_count);
    for (std::size_t i = 0; i < kTechniqueCount; ++i) rec.planted[i] = rng.chance(spec.plant_probability[i]);
    for (std::size_t i = 0; i < kTechniqueCount; ++i) {
      rec.near_misses[i] = !near_for[i].empty() && rng.chance(spec.near_miss_probability);
    }
    if (rng.chance(spec.signature_probability)) {
      double r = rng.uniform() * total_weight;
      for (const auto& a : spec.authors) {
        if (a.weight <= 0.0) continue;
        rec.signature = a.name;
        if (r < a.weight) break;
        r -= a.weight;
      }
    }

    Context ctx{rng, templates.words, rec.signature.value_or(""), ""};
    std::vector<std::string> dirs = {""};
    const auto n_dirs = rng.between(1, 3);
    for (std::int64_t d = 0; d < n_dirs; ++d) {
      const auto depth = rng.between(static_cast<std::int64_t>(spec.min_dir_depth), static_cast<std::int64_t>(spec.max_dir_depth));
      std::string dir;
      for (std::int64_t level = 0; level < depth; ++level) {
        if (!dir.empty()) dir += '/';
        dir += templates.words[rng.index(templates.words.size())];
      }
      dirs.push_back(dir);
    }

    KitBuilder kit;
    const auto emit = [&](const Template& t) {
      std::string path = render(t.path, ctx);
      kit.add(std::move(path), render(t.body, ctx));
    };
    for (const auto* t : base) emit(*t);
    const auto n_fill = rng.between(static_cast<std::int64_t>(spec.min_filler_files), static_cast<std::int64_t>(spec.max_filler_files));
    for (std::int64_t f = 0; f < n_fill; ++f) {
      const auto* t = pick(rng, fillers);
      ctx.dir = dirs[rng.index(dirs.size())];
      emit(*t);
    }
    ctx.dir.clear();
    for (std::size_t i = 0; i < kTechniqueCount; ++i) {
      if (rec.planted[i]) emit(*pick(rng, plant_for[i]));
    }
    for (std::size_t i = 0; i < kTechniqueCount; ++i) {
      if (rec.near_misses[i]) emit(*pick(rng, near_for[i]));
    }
    for (const auto* t : markers) {
      const bool positive = t->evasive_family ? rec.evasive() : rec.obfuscated();
      if (!rng.chance(positive ? hi : lo)) continue;
      (t->evasive_family ? rec.evasive_markers : rec.obfuscated_markers) += 1;
      emit(*t);
    }
    if (rec.signature) emit(*pick(rng, signatures));

    const fs::path root = kits_dir / rec.kit_id;
    for (const auto& [path, body] : kit.files()) {
      const fs::path target = root / path;
      fs::create_directories(target.parent_path(), ec);
      if (ec) throw Error(ErrorCode::IoError, "cannot create " + target.parent_path().string() + ": " + ec.message());
      io::write_file(target, body);
      rec.files += 1;
      rec.php_files += ingest::classify_file(path) == ingest::FileKind::Php ? 1 : 0;
    }
    rec.directories = directory_count(kit.files());
    manifest.kits.push_back(std::move(rec));
  }
  io::write_file(destination / "manifest.jsonl", manifest_jsonl(manifest));
  return manifest;
}

Json to_json(const KitRecord& r) {
  return Json{{"kit_id", r.kit_id},
              {"planted", technique_names(r.planted)},
              {"near_misses", technique_names(r.near_misses)},
              {"signature", r.signature ? Json(*r.signature) : Json(nullptr)},
              {"markers", {{"evasive", r.evasive_markers}, {"obfuscated", r.obfuscated_markers}}},
              {"structure", {{"files", r.files}, {"php_files", r.php_files}, {"directories", r.directories}}}};
}

std::string manifest_jsonl(const Manifest& m) {
  std::string out;
  for (const auto& r : m.kits) out += dump_json(to_json(r)) + "\n";
  return out;
}

Manifest parse_manifest(std::string_view jsonl) {
  Manifest m;
  std::size_t line_no = 0;
  for (const auto line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const Json j = Json::parse(line.begin(), line.end());
      KitRecord r;
      r.kit_id = j.at("kit_id").get<std::string>();
      r.planted = technique_flags(j.at("planted"), r.kit_id);
      r.near_misses = technique_flags(j.at("near_misses"), r.kit_id);
      if (!j.at("signature").is_null()) r.signature = j.at("signature").get<std::string>();
      r.evasive_markers = j.at("markers").at("evasive").get<std::size_t>();
      r.obfuscated_markers = j.at("markers").at("obfuscated").get<std::size_t>();
      r.files = j.at("structure").at("files").get<std::size_t>();
      r.php_files = j.at("structure").at("php_files").get<std::size_t>();
      r.directories = j.at("structure").at("directories").get<std::size_t>();
      m.kits.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

Manifest load_manifest(const fs::path& path) { return parse_manifest(io::read_file(path)); }

AgreementReport verify_against_manifest(const std::vector<features::LabeledSample>& scans, const Manifest& manifest) {
  std::map<std::string_view, const features::LabeledSample*> by_id;
  for (const auto& s : scans) {
    if (!by_id.emplace(s.kit_id, &s).second) throw Error(ErrorCode::KitIdMismatch, "duplicate scanned kit " + s.kit_id);
  }
  std::set<std::string_view> expected;
  for (const auto& r : manifest.kits) {
    if (!expected.insert(r.kit_id).second) throw Error(ErrorCode::KitIdMismatch, "duplicate manifest kit " + r.kit_id);
    if (by_id.count(r.kit_id) == 0) throw Error(ErrorCode::KitIdMismatch, "kit " + r.kit_id + " was not scanned");
  }
  for (const auto& [id, s] : by_id) {
    if (expected.count(id) == 0) throw Error(ErrorCode::KitIdMismatch, "kit " + std::string(id) + " is not in the manifest");
  }

  AgreementReport rep;
  for (const auto& r : manifest.kits) {
    const auto& s = *by_id.at(r.kit_id);
    bool any = false;
    for (std::size_t i = 0; i < kTechniqueCount; ++i) {
      const bool detected = s.labels.techniques[i];
      any = any || detected;
      auto& agg = rep.techniques[i];
      ++agg.total;
      if (detected == r.planted[i]) {
        ++agg.agree;
      } else {
        rep.disagreements.push_back({r.kit_id, static_cast<LabelTechnique>(i), r.planted[i], detected});
      }
    }
    if (r.near_miss_only()) {
      ++rep.near_miss_only_kits;
      if (any) rep.near_miss_false_positives.push_back(r.kit_id);
    }
    if (r.signature) {
      ++rep.signatures_planted;
      if (std::find(s.signatures.begin(), s.signatures.end(), *r.signature) != s.signatures.end()) ++rep.signatures_found;
    }
  }
  return rep;
}

Json to_json(const AgreementReport& r) {
  Json techniques = Json::object();
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    techniques[std::string(features::kTechniqueShortNames[i])] =
        Json{{"agree", r.techniques[i].agree}, {"total", r.techniques[i].total}, {"rate", r.techniques[i].rate()}};
  }
  Json dis = Json::array();
  for (const auto& d : r.disagreements) {
    dis.push_back(Json{{"kit_id", d.kit_id},
                       {"technique", features::short_name(d.technique)},
                       {"expected", d.expected},
                       {"detected", d.detected}});
  }
  return Json{{"schema_version", 1},
              {"techniques", std::move(techniques)},
              {"disagreements", std::move(dis)},
              {"near_miss_only_kits", r.near_miss_only_kits},
              {"near_miss_false_positives", r.near_miss_false_positives},
              {"signatures_planted", r.signatures_planted},
              {"signatures_found", r.signatures_found}};
}

}  // namespace kitscan::synth
