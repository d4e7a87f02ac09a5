#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace kitscan::encoding {

// Decodes bytes as UTF-8, replacing every maximal invalid subsequence with
// U+FFFD. Valid input is returned unchanged.
std::string lenient_utf8(std::string_view bytes);

bool is_valid_utf8(std::string_view bytes) noexcept;

// Appends the UTF-8 encoding of `code_point`; invalid scalars become U+FFFD.
void append_utf8(std::string& out, char32_t code_point);

std::string base64_encode(std::string_view bytes);

// Accepts the standard alphabet with or without '=' padding. Rejects
// characters outside the alphabet, misplaced padding and a dangling 6-bit
// group (length % 4 == 1).
std::optional<std::string> base64_decode(std::string_view text);

bool is_base64_alphabet(std::string_view text) noexcept;

}  // namespace kitscan::encoding
