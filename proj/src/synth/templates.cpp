#include <map>

#include "kitscan/error.hpp"
#include "kitscan/support/embedded.hpp"
#include "kitscan/support/io.hpp"
#include "kitscan/support/text.hpp"
#include "kitscan/synth.hpp"

namespace kitscan::synth {

namespace {

TemplateRole parse_role(const std::string& s) {
  static const std::map<std::string, TemplateRole> roles = {
      {"base", TemplateRole::Base},     {"filler", TemplateRole::Filler}, {"plant", TemplateRole::Plant},
      {"near_miss", TemplateRole::NearMiss}, {"marker", TemplateRole::Marker}, {"signature", TemplateRole::Signature}};
  const auto it = roles.find(s);
  if (it == roles.end()) throw Error(ErrorCode::InvalidArgument, "unknown template role '" + s + "'");
  return it->second;
}

template <typename ReadSource>
TemplateSet parse_set(std::string_view index_text, std::string_view words_text, ReadSource&& read_source) {
  Json index;
  try {
    index = Json::parse(index_text.begin(), index_text.end());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("template index is not valid JSON: ") + e.what());
  }
  if (!index.is_object() || !index.contains("templates") || !index["templates"].is_array()) {
    throw Error(ErrorCode::InvalidArgument, "template index needs a 'templates' array");
  }
  TemplateSet set;
  for (const auto& e : index["templates"]) {
    const auto str = [&](const char* key) -> std::string {
      if (!e.contains(key) || !e[key].is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("template entry lacks string field '") + key + "'");
      }
      return e[key].get<std::string>();
    };
    Template t;
    t.id = str("id");
    t.role = parse_role(str("role"));
    t.path = str("path");
    t.body = read_source(str("source"));
    if (t.role == TemplateRole::Plant || t.role == TemplateRole::NearMiss) {
      t.technique = features::parse_technique(str("technique"));
      if (!t.technique) throw Error(ErrorCode::InvalidArgument, "template " + t.id + ": unknown technique");
    }
    if (t.role == TemplateRole::Marker) {
      const auto family = str("family");
      if (family != "evasive" && family != "obfuscated") {
        throw Error(ErrorCode::InvalidArgument, "template " + t.id + ": family must be evasive or obfuscated");
      }
      t.evasive_family = family == "evasive";
    }
    set.templates.push_back(std::move(t));
  }
  set.words = text::parse_word_list(words_text);
  if (set.words.empty()) throw Error(ErrorCode::InvalidArgument, "template word list is empty");
  return set;
}

}  // namespace

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = [] {
    const auto need = [](const std::string& name) {
      const auto blob = embedded::find("templates/" + name);
      if (!blob) throw Error(ErrorCode::IoError, "missing built-in template file " + name);
      return std::string(*blob);
    };
    return parse_set(need("index.json"), need("words.txt"), need);
  }();
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  return parse_set(io::read_file(dir / "index.json"), io::read_file(dir / "words.txt"),
                   [&](const std::string& name) { return io::read_file(dir / name); });
}

}  // namespace kitscan::synth
