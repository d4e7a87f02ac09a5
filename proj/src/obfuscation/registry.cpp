#include <algorithm>
#include <set>

#include <boost/regex.hpp>

#include "kitscan/error.hpp"
#include "kitscan/obfuscation.hpp"
#include "kitscan/support/embedded.hpp"
#include "kitscan/support/io.hpp"

namespace kitscan::obfuscation {

struct Registry::Compiled {
  boost::regex re;
};

Registry::Registry() : compiled_(std::make_shared<const std::vector<Compiled>>()) {}

Registry Registry::from_json(std::string_view json_text, std::string_view source) {
  const auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::RegistryLoadError, std::string(source) + ": " + what);
  };
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) fail("expected a JSON array of fingerprints");

  std::vector<Fingerprint> entries;
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Json& item = doc[i];
    const std::string label = "entry " + std::to_string(i);
    if (!item.is_object()) fail(label + ": not an object");
    const auto tool = item.find("tool_name");
    const auto pattern = item.find("pattern");
    if (tool == item.end() || !tool->is_string() || tool->get<std::string>().empty()) {
      fail(label + ": missing or empty tool_name");
    }
    const std::string name = tool->get<std::string>();
    if (pattern == item.end() || !pattern->is_string() || pattern->get<std::string>().empty()) {
      fail(label + " (" + name + "): missing or empty pattern");
    }
    if (!names.insert(name).second) fail(label + " (" + name + "): duplicate tool_name");
    Fingerprint fp{name, pattern->get<std::string>(), {}};
    if (const auto desc = item.find("description"); desc != item.end()) {
      if (!desc->is_string()) fail(label + " (" + name + "): description must be a string");
      fp.description = desc->get<std::string>();
    }
    entries.push_back(std::move(fp));
  }
  std::sort(entries.begin(), entries.end(),
            [](const Fingerprint& a, const Fingerprint& b) { return a.tool_name < b.tool_name; });

  auto compiled = std::make_shared<std::vector<Compiled>>();
  for (const auto& fp : entries) {
    try {
      compiled->push_back({boost::regex(fp.pattern, boost::regex::perl)});
    } catch (const boost::regex_error& e) {
      fail("entry " + fp.tool_name + ": pattern does not compile: " + e.what());
    }
  }
  Registry r;
  r.entries_ = std::move(entries);
  r.compiled_ = std::move(compiled);
  return r;
}

const Registry& Registry::builtin() {
  static const Registry registry = [] {
    const auto data = embedded::find("config/fingerprints.json");
    if (!data) throw Error(ErrorCode::RegistryLoadError, "built-in fingerprint registry missing");
    return from_json(*data, "built-in fingerprints.json");
  }();
  return registry;
}

Registry Registry::load(const std::optional<std::filesystem::path>& path) {
  if (const auto file = io::config_file(path, "fingerprints.json")) {
    std::string text;
    try {
      text = io::read_file(*file);
    } catch (const Error& e) {
      throw Error(ErrorCode::RegistryLoadError, e.what());
    }
    return from_json(text, file->string());
  }
  return builtin();
}

std::optional<std::size_t> Registry::search(std::size_t index, std::string_view text) const {
  const boost::regex& re = (*compiled_)[index].re;
  boost::match_results<std::string_view::const_iterator> m;
  try {
    if (boost::regex_search(text.begin(), text.end(), m, re)) {
      return static_cast<std::size_t>(m[0].first - text.begin());
    }
  } catch (const std::runtime_error&) {
    // Boost gives up on pathological backtracking; treat as no match.
  }
  return std::nullopt;
}

}  // namespace kitscan::obfuscation
