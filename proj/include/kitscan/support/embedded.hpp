#pragma once

#include <optional>
#include <string_view>
#include <vector>

// Files under data/ compiled into the library at build time.
namespace kitscan::embedded {

std::optional<std::string_view> find(std::string_view name);
std::vector<std::string_view> names();

}  // namespace kitscan::embedded
