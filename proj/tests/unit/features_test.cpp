#include <doctest.h>

#include "fixtures.hpp"
#include "kitscan/error.hpp"
#include "kitscan/features.hpp"
#include "kitscan/support/io.hpp"
#include "kitscan/support/text.hpp"

using namespace kitscan;
using namespace kitscan::features;
using kitscan::testing::make_kit;
using kitscan::testing::TempDir;

namespace {

FeatureVector features_of(const std::vector<std::pair<std::string, std::string>>& files, std::string kit_id = "kit",
                          const Config& cfg = {}) {
  const auto kit = make_kit(files, std::move(kit_id));
  return extract_features(kit, php::analyze_php(kit), cfg);
}

LabeledSample sample(std::string id, std::int64_t n, bool evasive) {
  LabeledSample s;
  s.kit_id = std::move(id);
  s.features.values[0] = n;
  s.labels.evasive = evasive;
  s.labels.techniques[1] = evasive;
  return s;
}

}  // namespace

TEST_CASE("feature layout") {
  CHECK(kFeatureNames.size() == 43);
  CHECK(feature_index("nFiles") == 0u);
  CHECK(feature_index("Otherfiles") == 12u);
  CHECK(feature_index("htaccess") == 13u);
  CHECK(feature_index("$_SERVER") == 32u);
  CHECK(feature_index("write") == 42u);
  CHECK_FALSE(feature_index("nope").has_value());
}

TEST_CASE("structural counts") {
  const auto v = features_of({{"a.php", "<?php"}, {"b.js", ""}, {"sub/c.html", ""}});
  CHECK(v.get("nFiles") == 3);
  CHECK(v.get("nDir") == 1);
  CHECK(v.get("nPhp") == 1);
  CHECK(v.get("nJs") == 1);
  CHECK(v.get("nHtml") == 1);
  std::int64_t sum = 0;
  for (std::size_t i = 2; i <= 12; ++i) sum += v[i];
  CHECK(sum == v.get("nFiles"));
  for (std::size_t i = 13; i < kFeatureCount; ++i) CHECK(v[i] == 0);
}

TEST_CASE("relevant files and frameworks") {
  auto v = features_of({{"wp-content/themes/x.css", ""}, {"Admin/index.php", "<?php"}, {"inc/my_CONFIG.php", ""}});
  CHECK(v.get("wordpress") == 1);
  CHECK(v.get("admin") == 1);
  CHECK(v.get("config") == 1);
  CHECK(v.get("laravel") == 0);

  v = features_of({{"artisan", ""}, {"system/core/CodeIgniter.php", ""}, {"lib/Zend/Db.php", ""}});
  CHECK(v.get("laravel") == 1);
  CHECK(v.get("code_ign") == 1);
  CHECK(v.get("zend") == 1);

  v = features_of({{"index.html", "<!-- Mirrored from bank.example by HTTrack Website Copier/3.x -->"},
                   {"x.php", "<?php $u = 'https://api.telegram.org/bot123:abc/sendMessage';"}});
  CHECK(v.get("httrack") == 1);
  CHECK(v.get("bot_telegram") == 1);

  v = features_of({{".htaccess", "Options -Indexes"}, {"robots.txt", "Allow: /"}});
  CHECK(v.get("htaccess") == 1);
  CHECK(v.get("robots_txt") == 1);
  CHECK(v.get("admin") == 0);
}

TEST_CASE("php function features") {
  auto v = features_of({{"a.php",
                         "<?php\n"
                         "$ch = curl_init();\n"
                         "$ips = array('1.2.3.4');\n"
                         "$hosts = ['mail.example.com'];\n"
                         "if (filter_var($_POST['email'], FILTER_VALIDATE_EMAIL)) {}\n"
                         "$f = fopen('log.txt', 'a');\n"
                         "$g = fopen('in.txt', 'rb');\n"
                         "header('Location: next.php');\n"
                         "file_put_contents(md5(rand()) . '.txt', $d);\n"
                         "mkdir(uniqid());\n"
                         "mail($to, $s, $m);\n"
                         "$x = $_SESSION['a'] . $_COOKIE['b'];\n"}});
  CHECK(v.get("api_call") == 1);
  CHECK(v.get("array_ipaddresses") == 1);
  CHECK(v.get("array_hostnames") == 1);
  CHECK(v.get("form_validation") == 1);
  CHECK(v.get("read_file") == 1);
  CHECK(v.get("write") == 1);
  CHECK(v.get("redirection") == 1);
  CHECK(v.get("random_file") == 1);
  CHECK(v.get("random_dir") == 1);
  CHECK(v.get("mail") == 1);
  CHECK(v.get("$_POST") == 1);
  CHECK(v.get("$_SESSION") == 1);
  CHECK(v.get("$_COOKIE") == 1);
  CHECK(v.get("$_GET") == 0);

  v = features_of({{"a.php",
                    "<?php\n$x = file_get_contents('local.txt');\n"
                    "preg_match('/a/', $s);\n$f = fopen($p, 'r');\nmkdir('fixed');\n"}});
  CHECK(v.get("api_call") == 0);
  CHECK(v.get("read_file") == 1);
  CHECK(v.get("write") == 0);
  CHECK(v.get("form_validation") == 0);
  CHECK(v.get("random_dir") == 0);
  v = features_of({{"a.php", "<?php $x = file_get_contents('https://ipinfo.example/json');"}});
  CHECK(v.get("api_call") == 1);
}

TEST_CASE("deceiving names use brand tokens") {
  auto v = features_of({{"PayPal-login/index.php", "<?php"}}, "kit");
  CHECK(v.get("deceiving_url") == 1);
  CHECK(v.get("deceiving_zipname") == 0);
  v = features_of({{"index.php", "<?php"}}, "netflix_update.zip");
  CHECK(v.get("deceiving_url") == 0);
  CHECK(v.get("deceiving_zipname") == 1);
  Config cfg;
  cfg.brands = {"acme"};
  v = features_of({{"acme/index.php", "<?php"}}, "paypal.zip", cfg);
  CHECK(v.get("deceiving_url") == 1);
  CHECK(v.get("deceiving_zipname") == 0);
}

TEST_CASE("labels follow reports") {
  evasion::EvasionReport ev;
  obfuscation::ObfuscationReport ob;
  auto l = label_kit(ev, ob);
  CHECK_FALSE(l.evasive);
  CHECK_FALSE(l.obfuscated);

  ev.flags[static_cast<std::size_t>(evasion::Technique::RobotsTxt)] = true;
  l = label_kit(ev, ob);
  CHECK(l.evasive);
  CHECK(l.has(LabelTechnique::EvRobots));
  CHECK_FALSE(l.has(LabelTechnique::EvHtaccess));

  ob.flags[static_cast<std::size_t>(obfuscation::Technique::Eval)] = true;
  ob.flags[static_cast<std::size_t>(obfuscation::Technique::Hex)] = true;
  l = label_kit({}, ob);
  CHECK(l.obfuscated);
  CHECK_FALSE(l.evasive);
  CHECK(l.has(LabelTechnique::ObEval));
  CHECK(l.has(LabelTechnique::ObHex));
  CHECK(std::count(l.techniques.begin(), l.techniques.end(), true) == 2);
}

TEST_CASE("htaccess feature implies presence whenever the technique fires") {
  const auto kit = make_kit({{"x/.htaccess", "deny from all"}, {"robots.txt", "Disallow: /"}});
  const auto bundle = php::analyze_php(kit);
  const auto v = extract_features(kit, bundle);
  const auto labels = label_kit(evasion::detect_evasion(kit, bundle), {});
  CHECK(labels.has(LabelTechnique::EvHtaccess));
  CHECK(v.get("htaccess") == 1);
  CHECK(labels.has(LabelTechnique::EvRobots));
  CHECK(v.get("robots_txt") == 1);
}

TEST_CASE("matrix csv export and import") {
  const std::vector<LabeledSample> samples = {sample("a", 3, true), sample("b,\"q\"", 5, false)};
  const std::string csv = matrix_csv(samples);
  const auto lines = text::split_lines(csv);
  REQUIRE(lines.size() == 3);
  CHECK(text::split(lines[0], ',').size() == 1 + 43 + 2 + 8);
  CHECK(lines[0].starts_with("kit_id,nFiles,nDir,"));
  CHECK(lines[0].ends_with(",evasive,obfuscated,ev_htaccess,ev_robots,ev_php,ob_urldecode,ob_eval,ob_hex,ob_base64,ob_obfuscator"));
  CHECK(lines[1].starts_with("a,3,0,"));
  CHECK(lines[1].ends_with(",1,0,0,1,0,0,0,0,0,0"));
  CHECK(lines[2].starts_with("\"b,\"\"q\"\"\",5,"));

  const auto back = parse_matrix(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[1].kit_id == "b,\"q\"");
  CHECK(back[0].features == samples[0].features);
  CHECK(back[0].labels == samples[0].labels);
  CHECK(matrix_csv(back) == csv);

  TempDir dir;
  export_matrix(samples, dir.path() / "m.csv");
  export_matrix(samples, dir.path() / "m2.csv");
  CHECK(io::read_file(dir.path() / "m.csv") == io::read_file(dir.path() / "m2.csv"));
  CHECK(import_matrix(dir.path() / "m.csv").size() == 2);

  CHECK_THROWS_AS(matrix_csv({}), Error);
}

TEST_CASE("malformed matrices are rejected") {
  const std::string good = matrix_csv({sample("a", 1, true)});
  const auto code = [](const std::string& csv) {
    try {
      parse_matrix(csv);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code("") == ErrorCode::MalformedMatrix);
  CHECK(code("kit_id,x\n") == ErrorCode::MalformedMatrix);
  const auto header = good.substr(0, good.find('\n') + 1);
  const auto row = good.substr(good.find('\n') + 1);
  CHECK(code(header + row + row) == ErrorCode::MalformedMatrix);  // duplicate kit_id
  std::string bad = row;
  bad.replace(bad.find(",1,"), 3, ",x,");
  CHECK(code(header + bad) == ErrorCode::MalformedMatrix);
  CHECK(code(header + "a,1\n") == ErrorCode::MalformedMatrix);
  std::string inconsistent = row;
  inconsistent.replace(inconsistent.rfind(",1,0,0,1,"), 9, ",0,0,0,1,");
  CHECK(code(header + inconsistent) == ErrorCode::MalformedMatrix);
  CHECK(code(header + "\"a") == ErrorCode::MalformedMatrix);
  CHECK(parse_matrix(header).empty());
}

TEST_CASE("technique names") {
  CHECK(parse_technique("eval") == LabelTechnique::ObEval);
  CHECK(parse_technique("ROBOTS") == LabelTechnique::EvRobots);
  CHECK(parse_technique("ob_base64") == LabelTechnique::ObBase64);
  CHECK_FALSE(parse_technique("nope").has_value());
  CHECK(is_evasion_technique(LabelTechnique::EvPhp));
  CHECK_FALSE(is_evasion_technique(LabelTechnique::ObUrlDecode));
}
