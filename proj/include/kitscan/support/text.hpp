#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kitscan::text {

inline constexpr char ascii_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline constexpr bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline constexpr bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

inline constexpr bool is_alpha(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline constexpr bool is_alnum(char c) noexcept { return is_alpha(c) || is_digit(c); }

inline constexpr bool is_hex_digit(char c) noexcept {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

inline constexpr int hex_value(char c) noexcept {
  if (is_digit(c)) return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s) noexcept;
bool iequals(std::string_view a, std::string_view b) noexcept;
bool istarts_with(std::string_view s, std::string_view prefix) noexcept;
bool iends_with(std::string_view s, std::string_view suffix) noexcept;
bool icontains(std::string_view haystack, std::string_view needle) noexcept;
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0) noexcept;

// Splits on '\n' and strips one trailing '\r' per line. A trailing newline does
// not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// Returns the 1-based line `line` of `s` without its terminator, or an empty
// view when the line does not exist.
std::string_view line_at(std::string_view s, std::size_t line) noexcept;

// Truncates to at most `max_bytes` without splitting a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) noexcept;

// Loads a newline-separated list, dropping blank lines and '#' comments.
std::vector<std::string> parse_word_list(std::string_view content);

}  // namespace kitscan::text
