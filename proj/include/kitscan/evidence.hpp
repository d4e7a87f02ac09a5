#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "kitscan/support/json.hpp"

namespace kitscan {

struct Evidence {
  std::string file;
  std::size_t line = 0;
  std::string rule_id;
  std::string excerpt;  // at most kMaxExcerptBytes, verbatim from the cited line

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

inline constexpr std::size_t kMaxExcerptBytes = 200;

// The trimmed line, cut to kMaxExcerptBytes on a UTF-8 boundary.
std::string make_excerpt(std::string_view line);

Evidence make_evidence(std::string file, std::size_t line, std::string rule_id, std::string_view source_line);

Json to_json(const Evidence& e);

}  // namespace kitscan
