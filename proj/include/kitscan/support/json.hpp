#pragma once

#include <string>

#include <json.hpp>

namespace kitscan {

using Json = nlohmann::ordered_json;

// Serializes with invalid UTF-8 replaced rather than throwing; kit content is
// hostile and may leak undecodable bytes into names.
inline std::string dump_json(const Json& value, int indent = -1) {
  return value.dump(indent, ' ', false, Json::error_handler_t::replace);
}

}  // namespace kitscan
