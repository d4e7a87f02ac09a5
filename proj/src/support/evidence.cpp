#include "kitscan/evidence.hpp"

#include "kitscan/support/text.hpp"

namespace kitscan {

std::string make_excerpt(std::string_view line) {
  return std::string(text::utf8_prefix(text::trim(line), kMaxExcerptBytes));
}

Evidence make_evidence(std::string file, std::size_t line, std::string rule_id, std::string_view source_line) {
  return {std::move(file), line, std::move(rule_id), make_excerpt(source_line)};
}

Json to_json(const Evidence& e) {
  return Json{{"file", e.file}, {"line", e.line}, {"rule_id", e.rule_id}, {"excerpt", e.excerpt}};
}

}  // namespace kitscan
