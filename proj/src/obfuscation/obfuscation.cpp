#include "kitscan/obfuscation.hpp"

#include <algorithm>

#include "kitscan/support/encoding.hpp"
#include "kitscan/support/text.hpp"

namespace kitscan::obfuscation {

namespace {

using php::CallSite;
using php::PhpAnalysisBundle;
using php::StringStyle;

class Collector {
 public:
  explicit Collector(const PhpAnalysisBundle& bundle) : bundle_(bundle) {}

  void cite(const std::string& file, std::size_t line, std::string rule) {
    d_.flag = true;
    d_.evidence.push_back(make_evidence(file, line, std::move(rule), bundle_.source_line(file, line)));
  }

  Detection take() { return std::move(d_); }

 private:
  const PhpAnalysisBundle& bundle_;
  Detection d_;
};

bool interpolates(StringStyle s) { return s == StringStyle::Double || s == StringStyle::Heredoc; }

// Body between the quotes of a raw double-quoted literal.
std::string_view quoted_body(std::string_view raw) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return raw.substr(1, raw.size() - 2);
  return {};
}

// Length of a "\xH"/"\xHH" escape at `i`, or 0.
std::size_t hex_escape_at(std::string_view s, std::size_t i) noexcept {
  if (i + 2 >= s.size() || s[i] != '\\' || s[i + 1] != 'x' || !text::is_hex_digit(s[i + 2])) return 0;
  return (i + 3 < s.size() && text::is_hex_digit(s[i + 3])) ? 4 : 3;
}

bool all_hex_escapes(std::string_view body) noexcept {
  if (body.empty()) return false;
  std::size_t i = 0;
  while (i < body.size()) {
    const std::size_t n = hex_escape_at(body, i);
    if (n == 0) return false;
    i += n;
  }
  return true;
}

}  // namespace

std::string_view to_string(Technique t) noexcept {
  switch (t) {
    case Technique::UrlDecode: return "urldecode";
    case Technique::Eval: return "eval";
    case Technique::Hex: return "hex";
    case Technique::Base64: return "base64";
    case Technique::ObfuscatorTool: return "obfuscator";
  }
  return "obfuscator";
}

std::size_t count_percent_escapes(std::string_view s) noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    if (s[i] == '%' && text::is_hex_digit(s[i + 1]) && text::is_hex_digit(s[i + 2])) {
      ++n;
      i += 2;
    }
  }
  return n;
}

std::size_t longest_hex_run(std::string_view raw) noexcept {
  std::size_t best = 0, run = 0, i = 0;
  while (i < raw.size()) {
    if (const std::size_t n = hex_escape_at(raw, i); n > 0) {
      best = std::max(best, ++run);
      i += n;
      continue;
    }
    run = 0;
    i += raw[i] == '\\' ? 2 : 1;
  }
  return best;
}

std::optional<std::string> preg_modifiers(std::string_view pattern) {
  pattern = text::trim(pattern);
  if (pattern.size() < 2) return std::nullopt;
  const char open = pattern.front();
  if (text::is_alnum(open) || open == '\\' || text::is_space(open)) return std::nullopt;
  char close = open;
  if (open == '(') close = ')';
  else if (open == '[') close = ']';
  else if (open == '{') close = '}';
  else if (open == '<') close = '>';
  const std::size_t end = pattern.rfind(close);
  if (end == 0 || end == std::string_view::npos) return std::nullopt;
  return std::string(pattern.substr(end + 1));
}

Detection detect_eval(const PhpAnalysisBundle& bundle) {
  Collector c(bundle);
  for (const CallSite& call : bundle.call_sites) {
    if (call.callee == "eval") {
      c.cite(call.file, call.line, "eval.call");
    } else if (call.callee == "preg_replace" && call.first_arg_is_literal && !call.arg_literals.empty()) {
      const auto mods = preg_modifiers(call.arg_literals.front().decoded);
      if (mods && mods->find('e') != std::string::npos) c.cite(call.file, call.line, "eval.preg_replace_e");
    } else if ((call.callee == "assert" || call.callee == "create_function") && call.first_arg_is_literal) {
      c.cite(call.file, call.line, "eval." + call.callee);
    }
  }
  return c.take();
}

Detection detect_urldecode(const PhpAnalysisBundle& bundle, const Config& config) {
  Collector c(bundle);
  for (const CallSite& call : bundle.call_sites) {
    if (call.callee != "urldecode" && call.callee != "rawurldecode") continue;
    const bool escaped = std::any_of(call.arg_literals.begin(), call.arg_literals.end(), [&](const auto& l) {
      return count_percent_escapes(l.decoded) >= config.percent_escape_threshold;
    });
    if (escaped) c.cite(call.file, call.line, "urldecode.escapes");
    if (bundle.statements[call.statement].callees.count("eval") > 0) {
      c.cite(call.file, call.line, "urldecode.with_eval");
    }
  }
  return c.take();
}

Detection detect_hex(const PhpAnalysisBundle& bundle, const Config& config) {
  Collector c(bundle);
  for (const auto& lit : bundle.string_literals) {
    if (interpolates(lit.style) && longest_hex_run(lit.raw) >= config.hex_run_threshold) {
      c.cite(lit.file, lit.line, "hex.escape_run");
    }
  }
  for (const auto& dyn : bundle.dynamic_names) {
    if (dyn.literal.style == StringStyle::Double && all_hex_escapes(quoted_body(dyn.literal.raw))) {
      c.cite(dyn.literal.file, dyn.literal.line, "hex.dynamic_name");
    }
  }
  return c.take();
}

Detection detect_base64(const PhpAnalysisBundle& bundle, const Config& config) {
  Collector c(bundle);
  for (const CallSite& call : bundle.call_sites) {
    if (call.callee == "base64_decode") c.cite(call.file, call.line, "base64.call");
  }
  for (const auto& lit : bundle.string_literals) {
    if (lit.decoded.size() < config.base64_min_length || !encoding::is_base64_alphabet(lit.decoded)) continue;
    if (encoding::base64_decode(lit.decoded)) c.cite(lit.file, lit.line, "base64.literal");
  }
  return c.take();
}

Detection detect_obfuscator(const ingest::KitArchive& kit, const Registry& registry) {
  Detection d;
  for (const auto& entry : kit.entries) {
    if (entry.kind != ingest::FileKind::Php && entry.kind != ingest::FileKind::Js &&
        entry.kind != ingest::FileKind::Html) {
      continue;
    }
    const std::string content = entry.text();
    for (std::size_t i = 0; i < registry.entries().size(); ++i) {
      const auto offset = registry.search(i, content);
      if (!offset) continue;
      const std::size_t line = 1 + static_cast<std::size_t>(std::count(content.begin(), content.begin() + *offset, '\n'));
      d.flag = true;
      d.evidence.push_back(make_evidence(entry.relative_path, line, "obfuscator." + registry.entries()[i].tool_name,
                                         text::line_at(content, line)));
    }
  }
  return d;
}

ObfuscationReport detect_obfuscation(const ingest::KitArchive& kit, const PhpAnalysisBundle& bundle,
                                     const Registry& registry, const Config& config) {
  ObfuscationReport report;
  const Detection parts[] = {detect_urldecode(bundle, config), detect_eval(bundle), detect_hex(bundle, config),
                             detect_base64(bundle, config), detect_obfuscator(kit, registry)};
  for (std::size_t i = 0; i < kTechniques.size(); ++i) {
    report.flags[i] = parts[i].flag;
    report.evidence.insert(report.evidence.end(), parts[i].evidence.begin(), parts[i].evidence.end());
  }
  report.is_obfuscated = std::find(report.flags.begin(), report.flags.end(), true) != report.flags.end();
  return report;
}

Json to_json(const ObfuscationReport& report) {
  Json flags = Json::object();
  for (Technique t : kTechniques) flags[std::string(to_string(t))] = report.flag(t);
  Json evidence = Json::array();
  for (const auto& e : report.evidence) evidence.push_back(to_json(e));
  return Json{{"is_obfuscated", report.is_obfuscated}, {"techniques", flags}, {"evidence", evidence}};
}

}  // namespace kitscan::obfuscation
