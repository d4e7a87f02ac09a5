#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/ingest.hpp"

namespace kitscan::php {

// Whitespace is an extra kind beyond the PHP token classes so that the token
// stream always concatenates back to the input.
enum class TokenKind {
  OpenTag,
  CloseTag,
  InlineHtml,
  Identifier,
  Variable,
  StringLiteral,
  Number,
  Comment,
  Punct,
  Whitespace,
  Unknown,
};

enum class StringStyle { None, Single, Double, Heredoc, Nowdoc, Backtick };

std::string_view to_string(TokenKind kind) noexcept;

struct Token {
  TokenKind kind = TokenKind::Unknown;
  std::string text;   // raw lexeme; empty only for the implicit echo after "<?="
  std::string value;  // decoded string contents, or the identifier/variable name
  std::size_t line = 1;
  StringStyle style = StringStyle::None;
};

struct LexResult {
  std::vector<Token> tokens;
  std::size_t error_count = 0;
};

// Total: never throws, terminates on any input, and the concatenation of all
// token texts equals `source`.
LexResult tokenize_php(std::string_view source);

std::string decode_single_quoted(std::string_view body);
// Handles \n \t \r \v \e \f \\ \$ \" \xHH \u{H+} \uHHHH and octal \NNN.
std::string decode_double_quoted(std::string_view body);

inline constexpr std::string_view kSuperglobals[] = {"$_SERVER", "$_GET",     "$_POST", "$_FILES",
                                                     "$_REQUEST", "$_SESSION", "$_ENV",  "$_COOKIE"};

struct StringLiteral {
  std::string raw;
  std::string decoded;
  StringStyle style = StringStyle::None;
  std::string file;
  std::size_t line = 0;
};

struct CallSite {
  std::string callee;  // lowercased
  std::vector<StringLiteral> arg_literals;  // first nesting level only
  bool first_arg_is_literal = false;
  std::size_t arg_count = 0;
  std::string file;
  std::size_t line = 0;
  std::size_t statement = 0;  // index into PhpAnalysisBundle::statements
};

struct StringArray {
  std::vector<std::string> elements;  // decoded
  std::string file;
  std::size_t line = 0;
};

struct Comment {
  std::string text;
  std::string file;
  std::size_t line = 0;
};

// `${"..."}` variable names built from a string literal.
struct DynamicName {
  StringLiteral literal;
};

// Tokens between ';' boundaries (open/close tags also end a statement).
struct Statement {
  std::set<std::string> callees;
  std::set<std::string> superglobals;
};

struct FileFacts {
  std::string path;
  std::size_t token_errors = 0;
  std::shared_ptr<const std::string> source;
};

struct PhpAnalysisBundle {
  std::vector<CallSite> call_sites;
  std::set<std::string> superglobals_used;
  std::vector<StringLiteral> string_literals;
  std::vector<StringArray> string_arrays;
  std::vector<Comment> comments;
  std::vector<DynamicName> dynamic_names;
  std::vector<Statement> statements;
  std::vector<FileFacts> files;

  const FileFacts* file(std::string_view path) const noexcept;
  // The cited line of an analyzed file, or empty.
  std::string_view source_line(std::string_view path, std::size_t line) const noexcept;
};

// Lexes one PHP source and appends its facts to `bundle`.
void analyze_source(std::string_view path, std::string source, PhpAnalysisBundle& bundle);

// Covers every Php entry of the kit, in path order.
PhpAnalysisBundle analyze_php(const ingest::KitArchive& kit);

}  // namespace kitscan::php
