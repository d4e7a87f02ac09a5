#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "kitscan/evasion.hpp"
#include "kitscan/support/text.hpp"

using namespace kitscan;
using namespace kitscan::evasion;
using kitscan::testing::make_kit;

namespace {

Detection htaccess(const std::string& content) { return detect_htaccess(make_kit({{".htaccess", content}})); }

Detection php_only(const std::string& src, const Config& cfg = {}) {
  const auto kit = make_kit({{"index.php", src}});
  return detect_php_evasion(php::analyze_php(kit), cfg);
}

bool has_rule(const Detection& d, std::string_view rule) {
  return std::any_of(d.evidence.begin(), d.evidence.end(), [&](const Evidence& e) { return e.rule_id == rule; });
}

// Every excerpt must be a verbatim substring of the cited line of the cited file.
void check_sound(const ingest::KitArchive& kit, const std::vector<Evidence>& evidence) {
  for (const auto& e : evidence) {
    const auto* entry = kit.find(e.file);
    REQUIRE(entry != nullptr);
    const std::string text = entry->text();
    const auto line = text::line_at(text, e.line);
    CHECK(e.excerpt.size() <= kMaxExcerptBytes);
    CHECK(line.find(e.excerpt) != std::string_view::npos);
  }
}

}  // namespace

TEST_CASE("htaccess forbid and redirect rules") {
  auto d = htaccess("deny from 66.102.0.0/20\n");
  CHECK(d.flag);
  CHECK(has_rule(d, "forbid.deny_from"));

  CHECK_FALSE(htaccess("Options -Indexes\n").flag);

  d = htaccess("RewriteEngine On\nRewriteRule ^.*$ https://legit.example/ [R=302]\n");
  CHECK(d.flag);
  CHECK(has_rule(d, "redirect.rewrite_r"));
  REQUIRE(d.evidence.size() == 1);
  CHECK(d.evidence[0].line == 2);

  CHECK(has_rule(htaccess("Order Allow , Deny\n"), "forbid.order_allow_deny"));
  CHECK(has_rule(htaccess("  Require not ip 1.2.3.4"), "forbid.require_not"));
  CHECK(has_rule(htaccess("RedirectMatch 301 ^/x http://a.example"), "redirect.redirectmatch"));
  CHECK(has_rule(htaccess("Redirect 302 / http://a.example"), "redirect.redirect"));
  CHECK(has_rule(htaccess("ErrorDocument 404 http://a.example/"), "redirect.errordocument"));
  CHECK_FALSE(htaccess("ErrorDocument 404 /missing.html").flag);
  CHECK(has_rule(htaccess("RewriteRule ^a$ /b [L,R]"), "redirect.rewrite_r"));
  CHECK_FALSE(htaccess("RewriteRule ^a$ /b [L,QSA]").flag);
  CHECK_FALSE(htaccess("RewriteRule ^a$ /b").flag);
}

TEST_CASE("htaccess comments are inert and SetEnvIf needs a deny") {
  CHECK_FALSE(htaccess("# deny from all\n  # Redirect / http://x.example\n").flag);
  CHECK_FALSE(htaccess("SetEnvIfNoCase User-Agent googlebot bad\n").flag);
  const auto d = htaccess("SetEnvIfNoCase User-Agent googlebot bad\nDeny from env=bad\n");
  CHECK(has_rule(d, "forbid.setenvif_deny"));
  CHECK(has_rule(d, "forbid.deny_from"));
}

TEST_CASE("htaccess basename match is case-insensitive and nested") {
  const auto kit = make_kit({{"sub/.HTACCESS", "deny from all\r\n"}});
  const auto d = detect_htaccess(kit);
  CHECK(d.flag);
  check_sound(kit, d.evidence);
}

TEST_CASE("robots disallow rule") {
  CHECK(detect_robots(make_kit({{"robots.txt", "User-agent: *\nDisallow: /"}})).flag);
  CHECK_FALSE(detect_robots(make_kit({{"robots.txt", "User-agent: *\nDisallow:"}})).flag);
  CHECK_FALSE(detect_robots(make_kit({{"robots.txt", "Disallow:   # nothing"}})).flag);
  CHECK_FALSE(detect_robots(make_kit({{"robots.txt", "Allow: /"}})).flag);
  CHECK_FALSE(detect_robots(make_kit({{"robot.txt", "Disallow: /"}})).flag);
  CHECK(detect_robots(make_kit({{"x/ROBOTS.TXT", "disallow:/admin"}})).flag);
}

TEST_CASE("address and host syntax") {
  CHECK(is_ipv4_or_cidr("66.102.0.0"));
  CHECK(is_ipv4_or_cidr("66.102.0.0/20"));
  CHECK_FALSE(is_ipv4_or_cidr("66.102.0.0/33"));
  CHECK_FALSE(is_ipv4_or_cidr("256.1.1.1"));
  CHECK_FALSE(is_ipv4_or_cidr("1.2.3"));
  CHECK_FALSE(is_ipv4_or_cidr("1.2.3.4.5"));
  CHECK_FALSE(is_ipv4_or_cidr("1.2.3.4/"));
  CHECK_FALSE(is_ipv4_or_cidr("1234.1.1.1"));
  CHECK(is_hostname("crawl.google.com"));
  CHECK(is_hostname("phishtank.com."));
  CHECK_FALSE(is_hostname("localhost"));
  CHECK_FALSE(is_hostname("1.2.3.4"));
  CHECK_FALSE(is_hostname("index.php"));
  CHECK_FALSE(is_hostname("-a.com"));
  CHECK_FALSE(is_hostname("a b.com"));
}

TEST_CASE("php evasion rules") {
  auto d = php_only("<?php $bad = array(\"66.102.0.0\",\"64.233.160.0\",\"72.14.192.0\");");
  CHECK(d.flag);
  CHECK(has_rule(d, "php.ip_blacklist"));

  CHECK_FALSE(php_only("<?php $x = array('10.0.0.1', '10.0.0.2');").flag);
  CHECK(php_only("<?php $h = ['a.example.com', 'b.example.net', 'c.example.org'];").flag);
  CHECK(has_rule(php_only("<?php $ua = ['Googlebot'];"), "php.watchlist"));
  CHECK_FALSE(php_only("<?php $p = ['index.php', 'login.php', 'verify.php'];").flag);

  d = php_only("<?php header(\"Location: https://real-bank.example/\");");
  CHECK(has_rule(d, "php.redirect_header"));
  CHECK_FALSE(php_only("<?php header(\"Location: step2.php\");").flag);
  CHECK_FALSE(php_only("<?php $r->header(\"Location: https://x.example/\");").flag);
  CHECK(has_rule(php_only("<?php http_redirect($u);"), "php.http_redirect"));
}

TEST_CASE("php evasion watchlist and threshold are configurable") {
  Config cfg;
  cfg.watchlist = {"zzscanner"};
  cfg.blacklist_threshold = 2;
  CHECK_FALSE(php_only("<?php $ua = ['Googlebot'];", cfg).flag);
  CHECK(php_only("<?php $ua = ['ZZScanner/1.0'];", cfg).flag);
  CHECK(php_only("<?php $x = array('10.0.0.1', '10.0.0.2');", cfg).flag);
}

TEST_CASE("aggregate report") {
  auto kit = make_kit({{"robots.txt", "Disallow: /"}, {"index.php", "<?php echo 1;"}});
  auto r = detect_evasion(kit, php::analyze_php(kit));
  CHECK(r.flag(Technique::RobotsTxt));
  CHECK_FALSE(r.flag(Technique::Htaccess));
  CHECK_FALSE(r.flag(Technique::Php));
  CHECK(r.is_evasive);

  kit = make_kit({{"index.php", "<?php echo 1;"}});
  r = detect_evasion(kit, php::analyze_php(kit));
  CHECK_FALSE(r.is_evasive);
  CHECK(r.evidence.empty());

  kit = make_kit({{".htaccess", "deny from 1.2.3.4\n"},
                  {"bl.php", "<?php\n$bad = array(\"66.102.0.0\",\n \"64.233.160.0\",\"72.14.192.0\");"}});
  r = detect_evasion(kit, php::analyze_php(kit));
  CHECK(r.flag(Technique::Htaccess));
  CHECK(r.flag(Technique::Php));
  CHECK(r.evidence.size() >= 2);
  check_sound(kit, r.evidence);

  const auto j = to_json(r);
  CHECK(j["is_evasive"] == true);
  CHECK(j["techniques"]["htaccess"] == true);
}

TEST_CASE("monotonic under file addition") {
  auto base = std::vector<std::pair<std::string, std::string>>{{"robots.txt", "Disallow: /x"}};
  const auto before = detect_evasion(make_kit(base), {});
  base.push_back({"robots2/robots.txt", "Allow: /"});
  base.push_back({"a.php", "<?php header('Location: next.php');"});
  const auto kit = make_kit(base);
  const auto after = detect_evasion(kit, php::analyze_php(kit));
  for (Technique t : kTechniques) {
    if (before.flag(t)) CHECK(after.flag(t));
  }
}

TEST_CASE("excerpt is capped on a UTF-8 boundary") {
  const std::string line = "deny from " + std::string(195, 'a') + "\xc3\xa9\xc3\xa9";
  const auto kit = make_kit({{".htaccess", line}});
  const auto d = detect_htaccess(kit);
  REQUIRE(d.evidence.size() == 1);
  CHECK(d.evidence[0].excerpt.size() <= 200);
  check_sound(kit, d.evidence);
}
