#include <doctest.h>

#include <algorithm>
#include <cstdlib>

#include "fixtures.hpp"
#include "kitscan/error.hpp"
#include "kitscan/obfuscation.hpp"
#include "kitscan/support/rng.hpp"

using namespace kitscan;
using namespace kitscan::obfuscation;
using kitscan::testing::make_kit;
using kitscan::testing::TempDir;

namespace {

php::PhpAnalysisBundle bundle_of(const std::string& src) {
  php::PhpAnalysisBundle b;
  php::analyze_source("x.php", src, b);
  return b;
}

bool has_rule(const Detection& d, std::string_view rule) {
  return std::any_of(d.evidence.begin(), d.evidence.end(), [&](const Evidence& e) { return e.rule_id == rule; });
}

// Straightforward RFC 4648 encoder kept separate from the library codec.
std::string oracle_base64(const std::string& in) {
  static const char* A = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  std::size_t i = 0;
  for (; i + 3 <= in.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(in[i]) << 16) | (static_cast<unsigned char>(in[i + 1]) << 8) |
                       static_cast<unsigned char>(in[i + 2]);
    for (int k = 3; k >= 0; --k) out.push_back(A[(v >> (6 * k)) & 63]);
  }
  if (i + 1 == in.size()) {
    const unsigned v = static_cast<unsigned char>(in[i]) << 16;
    out += {A[(v >> 18) & 63], A[(v >> 12) & 63], '=', '='};
  } else if (i + 2 == in.size()) {
    const unsigned v = (static_cast<unsigned char>(in[i]) << 16) | (static_cast<unsigned char>(in[i + 1]) << 8);
    out += {A[(v >> 18) & 63], A[(v >> 12) & 63], A[(v >> 6) & 63], '='};
  }
  return out;
}

std::string oracle_base64_decode(const std::string& in) {
  std::string out;
  unsigned acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const char* A = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    acc = (acc << 6) | static_cast<unsigned>(std::string_view(A).find(c));
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

// Decodes a body made only of \xHH escapes.
std::string oracle_hex_decode(std::string_view body) {
  std::string out;
  for (std::size_t i = 0; i + 3 < body.size() + 1; i += 4) {
    out.push_back(static_cast<char>(std::strtol(std::string(body.substr(i + 2, 2)).c_str(), nullptr, 16)));
  }
  return out;
}

}  // namespace

TEST_CASE("eval detection") {
  CHECK(has_rule(detect_eval(bundle_of("<?php eval(base64_decode($p));")), "eval.call"));
  CHECK(has_rule(detect_eval(bundle_of("<?php preg_replace(\"/x/e\", $c, $s);")), "eval.preg_replace_e"));
  CHECK(has_rule(detect_eval(bundle_of("<?php preg_replace('#x#ie', $c, $s);")), "eval.preg_replace_e"));
  CHECK(has_rule(detect_eval(bundle_of("<?php preg_replace('{e}i', $c, $s);")), "eval.preg_replace_e") == false);
  CHECK_FALSE(detect_eval(bundle_of("<?php preg_replace('/e/i', $c, $s);")).flag);
  CHECK_FALSE(detect_eval(bundle_of("<?php // eval($x);\n$a = 1;")).flag);
  CHECK_FALSE(detect_eval(bundle_of("<html>eval(x)</html>")).flag);
  CHECK(has_rule(detect_eval(bundle_of("<?php assert('1==1');")), "eval.assert"));
  CHECK_FALSE(detect_eval(bundle_of("<?php assert($x > 0);")).flag);
  CHECK(has_rule(detect_eval(bundle_of("<?php create_function('$a', 'return 1;');")), "eval.create_function"));
}

TEST_CASE("preg modifier parsing") {
  CHECK(preg_modifiers("/x/e") == std::optional<std::string>("e"));
  CHECK(preg_modifiers("(a)is") == std::optional<std::string>("is"));
  CHECK(preg_modifiers("~a/e~") == std::optional<std::string>(""));
  CHECK_FALSE(preg_modifiers("abc").has_value());
  CHECK_FALSE(preg_modifiers("/").has_value());
}

TEST_CASE("urldecode detection") {
  CHECK(has_rule(detect_urldecode(bundle_of("<?php $a = urldecode(\"%65%76%61%6c%28\");")), "urldecode.escapes"));
  CHECK_FALSE(detect_urldecode(bundle_of("<?php $a = urldecode(\"%65%76%61%6c\");")).flag);
  CHECK_FALSE(detect_urldecode(bundle_of("<?php $q = urldecode($_GET['q']);")).flag);
  CHECK(has_rule(detect_urldecode(bundle_of("<?php eval(urldecode($s));")), "urldecode.with_eval"));
  CHECK(detect_urldecode(bundle_of("<?php $f = rawurldecode('%41%42%43%44%45%46');")).flag);
  CHECK_FALSE(detect_urldecode(bundle_of("<?php $x = urldecode($s);\neval($y);")).flag);
  CHECK(count_percent_escapes("%zz%41%4") == 1);
}

TEST_CASE("hex detection") {
  CHECK(detect_hex(bundle_of("<?php $f = \"\\x47\\x4c\\x4f\\x42\\x41\\x4c\\x53\\x00\";")).flag);
  CHECK_FALSE(detect_hex(bundle_of("<?php printf(\"%d\\x0A\", $n);")).flag);
  CHECK_FALSE(detect_hex(bundle_of("<?php $f = '\\x47\\x4c\\x4f\\x42\\x41\\x4c\\x53\\x00';")).flag);
  CHECK_FALSE(detect_hex(bundle_of("<?php $f = \"\\x47\\x4c\\x4f\\x42\\\\x41\\x4c\\x53\\x00\";")).flag);

  const std::string body = "\\x5f\\x50\\x4f\\x53\\x54";
  CHECK(oracle_hex_decode(body) == "_POST");
  const auto b = bundle_of("<?php $v = ${\"" + body + "\"}['pass'];");
  REQUIRE(b.dynamic_names.size() == 1);
  CHECK(b.dynamic_names[0].literal.decoded == oracle_hex_decode(body));
  const auto d = detect_hex(b);
  CHECK(has_rule(d, "hex.dynamic_name"));
  CHECK_FALSE(detect_hex(bundle_of("<?php $v = ${\"_POST\"};")).flag);

  CHECK(longest_hex_run("\\x41\\x4\\x42zz\\x41") == 3);
  CHECK(longest_hex_run("\\\\x41\\x41") == 1);
}

TEST_CASE("base64 detection") {
  CHECK(has_rule(detect_base64(bundle_of("<?php base64_decode(\"aGVsbG8=\");")), "base64.call"));

  Rng rng(3);
  std::string payload;
  for (int i = 0; i < 150; ++i) payload.push_back(static_cast<char>(rng.index(256)));
  const std::string lit = oracle_base64(payload);
  CHECK(lit.size() == 200);
  CHECK(oracle_base64_decode(lit) == payload);
  auto d = detect_base64(bundle_of("<?php $blob = '" + lit + "';"));
  CHECK(has_rule(d, "base64.literal"));

  const std::string short_lit = oracle_base64(payload.substr(0, 48));
  CHECK(short_lit.size() == 64);
  CHECK_FALSE(detect_base64(bundle_of("<?php $blob = '" + short_lit + "';")).flag);

  // Alphabet-only but undecodable (dangling group).
  CHECK_FALSE(detect_base64(bundle_of("<?php $x = '" + std::string(129, 'A') + "';")).flag);
  CHECK_FALSE(detect_base64(bundle_of("<?php $x = '" + std::string(127, 'A') + "!" + "';")).flag);
}

TEST_CASE("builtin registry and obfuscator detection") {
  const Registry& reg = Registry::builtin();
  REQUIRE(reg.entries().size() >= 4);
  CHECK(std::is_sorted(reg.entries().begin(), reg.entries().end(),
                       [](const Fingerprint& a, const Fingerprint& b) { return a.tool_name < b.tool_name; }));

  auto kit = make_kit({{"a.php", "<?php\n/* Obfuscation provided by FOPO */\n$a=1;"}});
  auto d = detect_obfuscator(kit);
  CHECK(d.flag);
  REQUIRE(d.evidence.size() == 1);
  CHECK(d.evidence[0].rule_id == "obfuscator.FOPO");
  CHECK(d.evidence[0].line == 2);

  kit = make_kit({{"a.php", "<?php // no obfuscation here, plain code\n$a = 1;"}});
  CHECK_FALSE(detect_obfuscator(kit).flag);

  kit = make_kit({{"a.php", "<?php /* Obfuscation provided by FOPO */"},
                  {"b.js", "// This file is protected by SomeGuard"},
                  {"c.txt", "This file is protected by X"}});
  d = detect_obfuscator(kit);
  CHECK(d.flag);
  CHECK(d.evidence.size() == 2);
}

TEST_CASE("registry loading errors and determinism") {
  const std::string a = R"([{"tool_name":"B","pattern":"bbb","description":""},{"tool_name":"A","pattern":"aaa"}])";
  const std::string b = R"([{"tool_name":"A","pattern":"aaa"},{"tool_name":"B","pattern":"bbb","description":""}])";
  const auto ra = Registry::from_json(a);
  const auto rb = Registry::from_json(b);
  REQUIRE(ra.entries().size() == 2);
  CHECK(ra.entries()[0].tool_name == "A");
  const auto kit = make_kit({{"x.php", "bbb\naaa"}});
  const auto da = detect_obfuscator(kit, ra);
  const auto db = detect_obfuscator(kit, rb);
  CHECK(da.evidence == db.evidence);

  const auto code_of = [](const std::string& json) {
    try {
      Registry::from_json(json);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of("not json") == ErrorCode::RegistryLoadError);
  CHECK(code_of("{}") == ErrorCode::RegistryLoadError);
  CHECK(code_of(R"([{"tool_name":"X","pattern":"(unclosed"}])") == ErrorCode::RegistryLoadError);
  CHECK(code_of(R"([{"tool_name":"X","pattern":"a"},{"tool_name":"X","pattern":"b"}])") == ErrorCode::RegistryLoadError);
  CHECK(code_of(R"([{"pattern":"a"}])") == ErrorCode::RegistryLoadError);
  try {
    Registry::from_json(R"([{"tool_name":"Good","pattern":"a"},{"tool_name":"Bad","pattern":"[z"}])");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("Bad") != std::string::npos);
  }

  TempDir dir;
  const auto path = dir.write("fp.json", R"([{"tool_name":"Mine","pattern":"MINE-ENC"}])");
  const auto loaded = Registry::load(path);
  REQUIRE(loaded.entries().size() == 1);
  CHECK(loaded.entries()[0].tool_name == "Mine");
}

TEST_CASE("aggregate obfuscation report") {
  auto kit = make_kit({{"a.php", "<?php eval($x);"}});
  auto r = detect_obfuscation(kit, php::analyze_php(kit));
  CHECK(r.flag(Technique::Eval));
  CHECK(r.is_obfuscated);
  CHECK(std::count(r.flags.begin(), r.flags.end(), true) == 1);

  kit = make_kit({{"a.php", "<?php echo 'hello';"}});
  r = detect_obfuscation(kit, php::analyze_php(kit));
  CHECK_FALSE(r.is_obfuscated);

  kit = make_kit({{"a.php", "<?php\neval(base64_decode($p));\n$f = \"\\x47\\x4c\\x4f\\x42\\x41\\x4c\\x53\\x00\";"}});
  r = detect_obfuscation(kit, php::analyze_php(kit));
  CHECK(r.flag(Technique::Eval));
  CHECK(r.flag(Technique::Hex));
  CHECK(r.flag(Technique::Base64));
  CHECK(std::count(r.flags.begin(), r.flags.end(), true) == 3);
  CHECK(to_json(r)["techniques"]["hex"] == true);
}
