#include <array>
#include <cstdint>

#include "kitscan/php_lexer.hpp"
#include "kitscan/support/encoding.hpp"
#include "kitscan/support/text.hpp"

namespace kitscan::php {

namespace {

using text::is_alnum;
using text::is_digit;
using text::is_hex_digit;

bool is_ident_start(char c) noexcept {
  return text::is_alpha(c) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

bool is_ident_char(char c) noexcept { return is_ident_start(c) || is_digit(c); }

bool is_inline_space(char c) noexcept { return c == ' ' || c == '\t'; }

// Longest operators first.
constexpr std::array<std::string_view, 39> kOperators = {
    "?->", "<=>", "**=", "...", "<<=", ">>=", "===", "!==", "?\?=", "->", "::", "=>", "==",
    "!=",  "<>",  "<=",  ">=",  "&&",  "||",  "++",  "--",  "+=",  "-=", "*=", "/=", ".=",
    "%=",  "&=",  "|=",  "^=",  "??",  "<<",  ">>",  "**",  "(",   ")",  "[",  "]",  ";",
};

constexpr std::string_view kSingleCharPunct = "+-*/%=<>!&|^~?:,.{}@\\";

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  LexResult run() {
    while (pos_ < src_.size()) {
      if (in_php_) {
        lex_php();
      } else {
        lex_html();
      }
    }
    return std::move(out_);
  }

 private:
  void emit(TokenKind kind, std::size_t begin, std::size_t end, std::string value = {},
            StringStyle style = StringStyle::None) {
    Token t;
    t.kind = kind;
    t.text = std::string(src_.substr(begin, end - begin));
    t.value = std::move(value);
    t.line = line_;
    t.style = style;
    for (char c : t.text) {
      if (c == '\n') ++line_;
    }
    out_.tokens.push_back(std::move(t));
    pos_ = end;
  }

  bool at(std::string_view s) const noexcept { return src_.substr(pos_, s.size()) == s; }

  // Length of an opening tag at `p`, or 0. Sets `echo` for "<?=".
  std::size_t open_tag_at(std::size_t p, bool& echo) const noexcept {
    echo = false;
    if (src_.substr(p, 2) != "<?") return 0;
    if (src_.substr(p + 2, 1) == "=") {
      echo = true;
      return 3;
    }
    if (text::istarts_with(src_.substr(p + 2), "php")) {
      if (p + 5 == src_.size() || text::is_space(src_[p + 5])) return 5;
      return 0;
    }
    if (p + 2 == src_.size() || text::is_space(src_[p + 2])) return 2;
    return 0;
  }

  std::size_t one_newline_or_space(std::size_t p) const noexcept {
    if (src_.substr(p, 2) == "\r\n") return 2;
    if (p < src_.size() && text::is_space(src_[p])) return 1;
    return 0;
  }

  void lex_html() {
    std::size_t p = pos_;
    bool echo = false;
    std::size_t tag_len = 0;
    while (p < src_.size()) {
      p = src_.find("<?", p);
      if (p == std::string_view::npos) {
        p = src_.size();
        break;
      }
      tag_len = open_tag_at(p, echo);
      if (tag_len > 0) break;
      p += 2;
    }
    if (p > pos_) emit(TokenKind::InlineHtml, pos_, p);
    if (pos_ >= src_.size()) return;
    std::size_t end = pos_ + tag_len;
    if (!echo) end += one_newline_or_space(end);
    emit(TokenKind::OpenTag, pos_, end);
    if (echo) {
      Token implicit;
      implicit.kind = TokenKind::Identifier;
      implicit.value = "echo";
      implicit.line = line_;
      out_.tokens.push_back(std::move(implicit));
    }
    in_php_ = true;
  }

  void lex_php() {
    const char c = src_[pos_];
    if (text::is_space(c)) {
      std::size_t e = pos_;
      while (e < src_.size() && text::is_space(src_[e])) ++e;
      emit(TokenKind::Whitespace, pos_, e);
      return;
    }
    if (at("?>")) {
      std::size_t e = pos_ + 2;
      if (src_.substr(e, 2) == "\r\n") e += 2;
      else if (src_.substr(e, 1) == "\n") e += 1;
      emit(TokenKind::CloseTag, pos_, e);
      in_php_ = false;
      return;
    }
    if (c == '#' || at("//")) {
      std::size_t e = pos_;
      while (e < src_.size() && src_[e] != '\n' && src_.substr(e, 2) != "?>") ++e;
      if (e > pos_ && src_[e - 1] == '\r' && e < src_.size() && src_[e] == '\n') --e;
      emit(TokenKind::Comment, pos_, e);
      return;
    }
    if (at("/*")) {
      std::size_t e = src_.find("*/", pos_ + 2);
      if (e == std::string_view::npos) {
        ++out_.error_count;
        e = src_.size();
      } else {
        e += 2;
      }
      emit(TokenKind::Comment, pos_, e);
      return;
    }
    if (c == '$') {
      std::size_t e = pos_ + 1;
      if (e < src_.size() && is_ident_start(src_[e])) {
        while (e < src_.size() && is_ident_char(src_[e])) ++e;
      }
      emit(TokenKind::Variable, pos_, e, std::string(src_.substr(pos_, e - pos_)));
      return;
    }
    if (at("<<<") && lex_heredoc()) return;
    if (is_ident_start(c)) {
      std::size_t e = pos_;
      while (e < src_.size() && is_ident_char(src_[e])) ++e;
      emit(TokenKind::Identifier, pos_, e, std::string(src_.substr(pos_, e - pos_)));
      return;
    }
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      lex_number();
      return;
    }
    if (c == '\'' || c == '"' || c == '`') {
      lex_quoted(c);
      return;
    }
    for (std::string_view op : kOperators) {
      if (at(op)) {
        emit(TokenKind::Punct, pos_, pos_ + op.size(), std::string(op));
        return;
      }
    }
    if (kSingleCharPunct.find(c) != std::string_view::npos) {
      emit(TokenKind::Punct, pos_, pos_ + 1, std::string(1, c));
      return;
    }
    // Control bytes have no meaning in PHP code: recover at the next newline.
    std::size_t e = src_.find('\n', pos_);
    if (e == std::string_view::npos) e = src_.size();
    ++out_.error_count;
    emit(TokenKind::Unknown, pos_, e);
  }

  void lex_number() {
    std::size_t e = pos_;
    if (src_.substr(e, 2) == "0x" || src_.substr(e, 2) == "0X") {
      e += 2;
      while (e < src_.size() && (is_hex_digit(src_[e]) || src_[e] == '_')) ++e;
    } else if (src_.substr(e, 2) == "0b" || src_.substr(e, 2) == "0B") {
      e += 2;
      while (e < src_.size() && (src_[e] == '0' || src_[e] == '1' || src_[e] == '_')) ++e;
    } else {
      while (e < src_.size() && (is_digit(src_[e]) || src_[e] == '_')) ++e;
      if (e < src_.size() && src_[e] == '.' && e + 1 < src_.size() && is_digit(src_[e + 1])) {
        ++e;
        while (e < src_.size() && (is_digit(src_[e]) || src_[e] == '_')) ++e;
      }
      if (e < src_.size() && (src_[e] == 'e' || src_[e] == 'E')) {
        std::size_t x = e + 1;
        if (x < src_.size() && (src_[x] == '+' || src_[x] == '-')) ++x;
        if (x < src_.size() && is_digit(src_[x])) {
          e = x;
          while (e < src_.size() && is_digit(src_[e])) ++e;
        }
      }
    }
    emit(TokenKind::Number, pos_, e, std::string(src_.substr(pos_, e - pos_)));
  }

  void lex_quoted(char quote) {
    std::size_t e = pos_ + 1;
    bool closed = false;
    while (e < src_.size()) {
      if (src_[e] == '\\' && e + 1 < src_.size()) {
        e += 2;
        continue;
      }
      if (src_[e] == quote) {
        closed = true;
        break;
      }
      ++e;
    }
    std::string_view body = src_.substr(pos_ + 1, (closed ? e : std::min(e, src_.size())) - pos_ - 1);
    if (!closed) {
      ++out_.error_count;
      e = src_.size();
    } else {
      ++e;
    }
    StringStyle style = quote == '\'' ? StringStyle::Single : quote == '"' ? StringStyle::Double : StringStyle::Backtick;
    std::string value = style == StringStyle::Single ? decode_single_quoted(body) : decode_double_quoted(body);
    emit(TokenKind::StringLiteral, pos_, e, std::move(value), style);
  }

  // Returns false if "<<<" does not introduce a well-formed heredoc label, in
  // which case the caller lexes it as an operator.
  bool lex_heredoc() {
    std::size_t p = pos_ + 3;
    while (p < src_.size() && is_inline_space(src_[p])) ++p;
    char quote = 0;
    if (p < src_.size() && (src_[p] == '\'' || src_[p] == '"')) quote = src_[p++];
    if (p >= src_.size() || !(text::is_alpha(src_[p]) || src_[p] == '_')) return false;
    const std::size_t label_begin = p;
    while (p < src_.size() && (is_alnum(src_[p]) || src_[p] == '_')) ++p;
    const std::string_view label = src_.substr(label_begin, p - label_begin);
    if (quote != 0) {
      if (p >= src_.size() || src_[p] != quote) return false;
      ++p;
    }
    if (src_.substr(p, 2) == "\r\n") p += 2;
    else if (src_.substr(p, 1) == "\n") p += 1;
    else return false;
    const StringStyle style = quote == '\'' ? StringStyle::Nowdoc : StringStyle::Heredoc;
    const std::size_t body_begin = p;

    std::size_t line_start = body_begin;
    while (line_start <= src_.size()) {
      std::size_t q = line_start;
      while (q < src_.size() && is_inline_space(src_[q])) ++q;
      if (src_.substr(q, label.size()) == label &&
          (q + label.size() == src_.size() || !is_ident_char(src_[q + label.size()]))) {
        const std::size_t indent = q - line_start;
        std::size_t body_end = line_start > body_begin ? line_start - 1 : body_begin;
        if (body_end > body_begin && src_[body_end - 1] == '\r') --body_end;
        std::string body = strip_indent(src_.substr(body_begin, body_end - body_begin), indent);
        emit(TokenKind::StringLiteral, pos_, q + label.size(),
             style == StringStyle::Nowdoc ? body : decode_double_quoted(body), style);
        return true;
      }
      const std::size_t nl = src_.find('\n', line_start);
      if (nl == std::string_view::npos) break;
      line_start = nl + 1;
    }
    ++out_.error_count;
    std::string_view body = src_.substr(body_begin);
    emit(TokenKind::StringLiteral, pos_, src_.size(),
         style == StringStyle::Nowdoc ? std::string(body) : decode_double_quoted(body), style);
    return true;
  }

  static std::string strip_indent(std::string_view body, std::size_t indent) {
    if (indent == 0) return std::string(body);
    std::string out;
    out.reserve(body.size());
    std::size_t start = 0;
    while (start <= body.size()) {
      std::size_t nl = body.find('\n', start);
      std::string_view line = body.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
      std::size_t drop = 0;
      while (drop < indent && drop < line.size() && is_inline_space(line[drop])) ++drop;
      out.append(line.substr(drop));
      if (nl == std::string_view::npos) break;
      out.push_back('\n');
      start = nl + 1;
    }
    return out;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  bool in_php_ = false;
  LexResult out_;
};

}  // namespace

std::string_view to_string(TokenKind kind) noexcept {
  switch (kind) {
    case TokenKind::OpenTag: return "OpenTag";
    case TokenKind::CloseTag: return "CloseTag";
    case TokenKind::InlineHtml: return "InlineHtml";
    case TokenKind::Identifier: return "Identifier";
    case TokenKind::Variable: return "Variable";
    case TokenKind::StringLiteral: return "StringLiteral";
    case TokenKind::Number: return "Number";
    case TokenKind::Comment: return "Comment";
    case TokenKind::Punct: return "Punct";
    case TokenKind::Whitespace: return "Whitespace";
    case TokenKind::Unknown: return "Unknown";
  }
  return "Unknown";
}

LexResult tokenize_php(std::string_view source) { return Lexer(source).run(); }

std::string decode_single_quoted(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\\' && i + 1 < body.size() && (body[i + 1] == '\\' || body[i + 1] == '\'')) {
      out.push_back(body[++i]);
    } else {
      out.push_back(body[i]);
    }
  }
  return out;
}

std::string decode_double_quoted(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c != '\\' || i + 1 >= body.size()) {
      out.push_back(c);
      continue;
    }
    const char n = body[i + 1];
    switch (n) {
      case 'n': out.push_back('\n'); ++i; continue;
      case 't': out.push_back('\t'); ++i; continue;
      case 'r': out.push_back('\r'); ++i; continue;
      case 'v': out.push_back('\v'); ++i; continue;
      case 'e': out.push_back('\x1b'); ++i; continue;
      case 'f': out.push_back('\f'); ++i; continue;
      case '\\': out.push_back('\\'); ++i; continue;
      case '$': out.push_back('$'); ++i; continue;
      case '"': out.push_back('"'); ++i; continue;
      case '`': out.push_back('`'); ++i; continue;
      default: break;
    }
    if (n == 'x' && i + 2 < body.size() && is_hex_digit(body[i + 2])) {
      int v = text::hex_value(body[i + 2]);
      std::size_t used = 3;
      if (i + 3 < body.size() && is_hex_digit(body[i + 3])) {
        v = v * 16 + text::hex_value(body[i + 3]);
        used = 4;
      }
      out.push_back(static_cast<char>(v));
      i += used - 1;
      continue;
    }
    if (n >= '0' && n <= '7') {
      int v = 0;
      std::size_t used = 1;
      while (used <= 3 && i + used < body.size() && body[i + used] >= '0' && body[i + used] <= '7') {
        v = v * 8 + (body[i + used] - '0');
        ++used;
      }
      out.push_back(static_cast<char>(v & 0xFF));
      i += used - 1;
      continue;
    }
    if (n == 'u') {
      if (i + 2 < body.size() && body[i + 2] == '{') {
        const std::size_t close = body.find('}', i + 3);
        if (close != std::string_view::npos && close > i + 3 && close - (i + 3) <= 8) {
          std::uint32_t cp = 0;
          bool ok = true;
          for (std::size_t k = i + 3; k < close; ++k) {
            if (!is_hex_digit(body[k])) { ok = false; break; }
            cp = cp * 16 + static_cast<std::uint32_t>(text::hex_value(body[k]));
          }
          if (ok) {
            encoding::append_utf8(out, static_cast<char32_t>(cp));
            i = close;
            continue;
          }
        }
      } else if (i + 5 < body.size() && is_hex_digit(body[i + 2]) && is_hex_digit(body[i + 3]) &&
                 is_hex_digit(body[i + 4]) && is_hex_digit(body[i + 5])) {
        std::uint32_t cp = 0;
        for (std::size_t k = i + 2; k < i + 6; ++k) cp = cp * 16 + static_cast<std::uint32_t>(text::hex_value(body[k]));
        encoding::append_utf8(out, static_cast<char32_t>(cp));
        i += 5;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace kitscan::php
