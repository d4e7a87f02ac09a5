#include <algorithm>
#include <array>

#include "kitscan/php_lexer.hpp"
#include "kitscan/support/text.hpp"

namespace kitscan::php {

namespace {

constexpr std::array<std::string_view, 17> kNotCallees = {
    "if",     "elseif", "while", "for", "foreach", "switch", "catch", "match", "array",
    "list",   "return", "and",   "or",  "xor",     "new",    "function", "fn",
};

bool is_not_callee(std::string_view lowered) {
  return std::find(kNotCallees.begin(), kNotCallees.end(), lowered) != kNotCallees.end();
}

bool is_punct(const Token& t, std::string_view p) { return t.kind == TokenKind::Punct && t.text == p; }

bool is_ident_char(char c) noexcept {
  return text::is_alnum(c) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

bool ends_statement(const Token& t) {
  return is_punct(t, ";") || t.kind == TokenKind::OpenTag || t.kind == TokenKind::CloseTag ||
         t.kind == TokenKind::InlineHtml;
}

// Superglobals referenced inside an interpolating string body.
void scan_interpolated(std::string_view raw, std::set<std::string>& found) {
  for (std::string_view name : kSuperglobals) {
    std::size_t p = 0;
    while ((p = raw.find(name, p)) != std::string_view::npos) {
      const std::size_t end = p + name.size();
      if (end >= raw.size() || !is_ident_char(raw[end])) {
        found.emplace(name);
        break;
      }
      p = end;
    }
  }
}

class FileAnalyzer {
 public:
  FileAnalyzer(std::string_view path, const LexResult& lex, PhpAnalysisBundle& bundle)
      : path_(path), lex_(lex), bundle_(bundle) {}

  void run() {
    const auto& tokens = lex_.tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const Token& t = tokens[i];
      if (t.kind == TokenKind::Whitespace) continue;
      if (t.kind == TokenKind::Comment) {
        bundle_.comments.push_back({t.text, std::string(path_), t.line});
        continue;
      }
      sig_.push_back(i);
    }

    new_statement();
    for (std::size_t s = 0; s < sig_.size(); ++s) {
      const Token& t = tok(s);
      if (ends_statement(t)) {
        new_statement();
        continue;
      }
      switch (t.kind) {
        case TokenKind::Variable:
          on_variable(s);
          break;
        case TokenKind::StringLiteral:
          on_string(t);
          break;
        case TokenKind::Identifier:
          on_identifier(s);
          break;
        case TokenKind::Punct:
          if (t.text == "[" && opens_short_array(s)) collect_array(s);
          break;
        default:
          break;
      }
    }
  }

 private:
  const Token& tok(std::size_t s) const { return lex_.tokens[sig_[s]]; }
  const Token* at(std::size_t s) const { return s < sig_.size() ? &tok(s) : nullptr; }

  void new_statement() {
    bundle_.statements.emplace_back();
    statement_ = bundle_.statements.size() - 1;
  }

  void add_superglobal(const std::string& name) {
    bundle_.superglobals_used.insert(name);
    bundle_.statements[statement_].superglobals.insert(name);
  }

  StringLiteral literal_of(const Token& t) const {
    return {t.text, t.value, t.style, std::string(path_), t.line};
  }

  void on_variable(std::size_t s) {
    const Token& t = tok(s);
    for (std::string_view name : kSuperglobals) {
      if (t.text == name) add_superglobal(t.text);
    }
    // ${"..."}
    if (t.text == "$") {
      const Token* open = at(s + 1);
      const Token* lit = at(s + 2);
      const Token* close = at(s + 3);
      if (open && lit && close && is_punct(*open, "{") && lit->kind == TokenKind::StringLiteral &&
          is_punct(*close, "}")) {
        bundle_.dynamic_names.push_back({literal_of(*lit)});
      }
    }
  }

  void on_string(const Token& t) {
    bundle_.string_literals.push_back(literal_of(t));
    if (t.style == StringStyle::Double || t.style == StringStyle::Heredoc || t.style == StringStyle::Backtick) {
      std::set<std::string> found;
      scan_interpolated(t.text, found);
      for (const auto& name : found) add_superglobal(name);
    }
  }

  void on_identifier(std::size_t s) {
    const Token& t = tok(s);
    const Token* next = at(s + 1);
    if (next == nullptr || !is_punct(*next, "(")) return;
    const std::string lowered = text::to_lower(t.value.empty() ? t.text : t.value);
    if (lowered == "array") {
      collect_array(s + 1);
      return;
    }
    if (s > 0) {
      const Token& prev = tok(s - 1);
      if (is_punct(prev, "->") || is_punct(prev, "::") || is_punct(prev, "?->")) return;
      if (prev.kind == TokenKind::Identifier) {
        const std::string p = text::to_lower(prev.text);
        if (p == "function" || p == "fn" || p == "new" || p == "const") return;
      }
    }
    if (lowered.empty() || is_not_callee(lowered)) return;

    CallSite call;
    call.callee = lowered;
    call.file = std::string(path_);
    call.line = t.line;
    call.statement = statement_;
    int depth = 0;
    bool any_arg = false;
    for (std::size_t k = s + 1; k < sig_.size(); ++k) {
      const Token& a = tok(k);
      if (a.kind == TokenKind::OpenTag || a.kind == TokenKind::CloseTag || a.kind == TokenKind::InlineHtml) break;
      if (k == s + 1) {
        depth = 1;
        continue;
      }
      if (!any_arg && !(depth == 1 && is_punct(a, ")"))) {
        any_arg = true;
        call.arg_count = 1;
        const Token* after = at(k + 1);
        call.first_arg_is_literal = a.kind == TokenKind::StringLiteral && after != nullptr &&
                                    (is_punct(*after, ",") || is_punct(*after, ")"));
      }
      const int before = depth;
      if (a.kind == TokenKind::Punct && (a.text == "(" || a.text == "[" || a.text == "{")) {
        ++depth;
      } else if (a.kind == TokenKind::Punct && (a.text == ")" || a.text == "]" || a.text == "}")) {
        if (--depth == 0) break;
      }
      if (before == 1) {
        if (is_punct(a, ",")) {
          const Token* after = at(k + 1);
          if (after != nullptr && !is_punct(*after, ")")) ++call.arg_count;
        }
        if (a.kind == TokenKind::StringLiteral) call.arg_literals.push_back(literal_of(a));
      }
    }
    bundle_.statements[statement_].callees.insert(call.callee);
    bundle_.call_sites.push_back(std::move(call));
  }

  bool opens_short_array(std::size_t s) const {
    if (s == 0) return true;
    const Token& prev = tok(s - 1);
    switch (prev.kind) {
      case TokenKind::Variable:
      case TokenKind::Identifier:
      case TokenKind::StringLiteral:
        return false;
      case TokenKind::Punct:
        return prev.text != ")" && prev.text != "]" && prev.text != "}";
      default:
        return true;
    }
  }

  // `open` is the index of "(" (array form) or "[" (short form). Records the
  // array when every first-level element is a string, optionally keyed.
  void collect_array(std::size_t open) {
    const std::string_view close = tok(open).text == "(" ? ")" : "]";
    std::vector<std::string> elements;
    std::vector<const Token*> element;
    bool ok = true;
    auto flush = [&]() {
      if (element.empty()) return;
      if (element.size() == 1 && element[0]->kind == TokenKind::StringLiteral) {
        elements.push_back(element[0]->value);
      } else if (element.size() == 3 &&
                 (element[0]->kind == TokenKind::StringLiteral || element[0]->kind == TokenKind::Number) &&
                 is_punct(*element[1], "=>") && element[2]->kind == TokenKind::StringLiteral) {
        elements.push_back(element[2]->value);
      } else {
        ok = false;
      }
      element.clear();
    };
    for (std::size_t k = open + 1; k < sig_.size() && ok; ++k) {
      const Token& a = tok(k);
      if (is_punct(a, close)) {
        flush();
        if (ok && !elements.empty()) {
          bundle_.string_arrays.push_back({std::move(elements), std::string(path_), tok(open).line});
        }
        return;
      }
      if (is_punct(a, ",")) {
        if (element.empty()) return;  // ",," or leading comma
        flush();
        continue;
      }
      element.push_back(&a);
      if (element.size() > 3) return;
    }
  }

  std::string_view path_;
  const LexResult& lex_;
  PhpAnalysisBundle& bundle_;
  std::vector<std::size_t> sig_;
  std::size_t statement_ = 0;
};

}  // namespace

const FileFacts* PhpAnalysisBundle::file(std::string_view path) const noexcept {
  for (const auto& f : files) {
    if (f.path == path) return &f;
  }
  return nullptr;
}

std::string_view PhpAnalysisBundle::source_line(std::string_view path, std::size_t line) const noexcept {
  const FileFacts* f = file(path);
  if (f == nullptr || !f->source) return {};
  return text::line_at(*f->source, line);
}

void analyze_source(std::string_view path, std::string source, PhpAnalysisBundle& bundle) {
  auto shared = std::make_shared<const std::string>(std::move(source));
  const LexResult lex = tokenize_php(*shared);
  bundle.files.push_back({std::string(path), lex.error_count, shared});
  FileAnalyzer(path, lex, bundle).run();
}

PhpAnalysisBundle analyze_php(const ingest::KitArchive& kit) {
  PhpAnalysisBundle bundle;
  for (const auto& entry : kit.entries) {
    if (entry.kind != ingest::FileKind::Php) continue;
    analyze_source(entry.relative_path, entry.text(), bundle);
  }
  return bundle;
}

}  // namespace kitscan::php
