#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "kitscan/error.hpp"
#include "kitscan/evaluation.hpp"
#include "kitscan/features.hpp"
#include "kitscan/pipeline.hpp"
#include "kitscan/support/io.hpp"
#include "kitscan/support/json.hpp"
#include "kitscan/synth.hpp"

namespace kitscan::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string watchlist, brands, fingerprints, allowlist, denylist;

  static std::optional<fs::path> opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
  }
  pipeline::ConfigPaths paths() const {
    return {opt(watchlist), opt(brands), opt(fingerprints), opt(allowlist), opt(denylist)};
  }
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--watchlist", f.watchlist, "user-agent/host watchlist file");
  cmd->add_option("--brands", f.brands, "brand list for deceiving names");
  cmd->add_option("--fingerprints", f.fingerprints, "obfuscator fingerprint registry (JSON)");
}

void add_curation_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--allowlist", f.allowlist, "author names always kept");
  cmd->add_option("--denylist", f.denylist, "author names always dropped");
}

// Writes to the file when one was given, else to the stream.
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    io::write_file(path, content);
  }
}

void report_listing(const pipeline::CorpusScan& scan, std::ostream& err) {
  for (const auto& w : scan.warnings) err << "warning: " << w << '\n';
  for (const auto& f : scan.failures) err << dump_json(pipeline::to_json(f)) << '\n';
}

int scan_status(const pipeline::CorpusScan& scan) { return scan.failures.empty() ? kExitOk : kExitPartial; }

struct ScanArgs {
  std::string path, out;
  bool corpus = false;
  std::size_t jobs = 1;
  ConfigFlags config;
};

int cmd_scan(const ScanArgs& a, std::ostream& out, std::ostream& err) {
  const auto cfg = pipeline::ScanConfig::load(a.config.paths());
  std::string text;
  if (!a.corpus) {
    text = dump_json(pipeline::to_json(pipeline::scan_kit(a.path, cfg))) + '\n';
    emit(a.out, text, out);
    return kExitOk;
  }
  const auto scan = pipeline::scan_corpus(a.path, cfg, a.jobs);
  // Reports and failure entries interleaved by kit_id.
  std::vector<std::pair<std::string, std::string>> lines;
  for (const auto& k : scan.kits) lines.emplace_back(k.kit_id, dump_json(pipeline::to_json(k)));
  for (const auto& f : scan.failures) lines.emplace_back(f.kit_id, dump_json(pipeline::to_json(f)));
  std::stable_sort(lines.begin(), lines.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [id, line] : lines) (text += line) += '\n';
  emit(a.out, text, out);
  report_listing(scan, err);
  return scan_status(scan);
}

struct FeaturesArgs {
  std::string corpus, out;
  std::size_t jobs = 1;
  ConfigFlags config;
};

int cmd_features(const FeaturesArgs& a, std::ostream& out, std::ostream& err) {
  const auto scan = pipeline::scan_corpus(a.corpus, pipeline::ScanConfig::load(a.config.paths()), a.jobs);
  report_listing(scan, err);
  std::vector<features::LabeledSample> samples;
  for (const auto& k : scan.kits) samples.push_back(k.sample());
  emit(a.out, features::matrix_csv(samples), out);
  return scan_status(scan);
}

struct EvaluateArgs {
  std::string matrix, scenario, target, exclude, out, format = "table";
  std::uint64_t seed = 42;
  bool keep_multi = false;
  std::size_t jobs = 1;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto target = eval::parse_target(a.target);
  if (!target) throw Error(ErrorCode::InvalidArgument, "--target must be evasive or obfuscated");
  if (a.scenario != "s3" && !a.exclude.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--exclude only applies to --scenario s3");
  }
  if (a.scenario == "s3" && a.exclude.empty()) {
    throw Error(ErrorCode::MissingExclusion, "scenario s3 needs --exclude <technique|all>");
  }
  const auto samples = features::import_matrix(a.matrix);
  eval::RunOptions run;
  run.seed = a.seed;
  run.jobs = a.jobs;

  Json json;
  std::string table;
  if (a.scenario == "s3") {
    std::optional<features::LabelTechnique> only;
    if (a.exclude != "all") {
      only = features::parse_technique(a.exclude);
      if (!only) throw Error(ErrorCode::InvalidArgument, "unknown technique '" + a.exclude + "'");
    }
    eval::Scenario3Options opt;
    opt.run = run;
    opt.keep_multi_technique_in_training = a.keep_multi;
    const auto r = eval::run_scenario3_family(samples, *target, opt, only);
    json = eval::to_json(r);
    table = eval::text_table(r);
  } else {
    const auto r = a.scenario == "s1" ? eval::run_scenario1(samples, *target, run)
                                      : eval::run_scenario2(samples, *target, run);
    json = eval::to_json(r);
    table = eval::text_table(r);
  }
  const std::string json_text = dump_json(json, 2) + '\n';
  if (a.out.empty()) {
    out << (a.format == "json" ? json_text : table);
  } else {
    io::write_file(a.out + ".json", json_text);
    io::write_file(a.out + ".txt", table);
  }
  return kExitOk;
}

struct AuthorsArgs {
  std::string corpus, out, format = "table";
  std::size_t top = 5;
  std::size_t jobs = 1;
  ConfigFlags config;
};

int cmd_authors(const AuthorsArgs& a, std::ostream& out, std::ostream& err) {
  const auto paths = a.config.paths();
  const auto scan = pipeline::scan_corpus(a.corpus, pipeline::ScanConfig::load(paths), a.jobs);
  report_listing(scan, err);
  std::vector<authors::KitSignatures> kits;
  for (const auto& k : scan.kits) {
    authors::KitSignatures ks{k.kit_id, {}, k.labels.evasive, k.labels.obfuscated};
    for (const auto& s : k.signatures) ks.names.push_back(s.name);
    kits.push_back(std::move(ks));
  }
  const auto profiles =
      eval::profile_report(kits, authors::Curation::load(paths.allowlist, paths.denylist), a.top);
  emit(a.out, a.format == "json" ? dump_json(eval::profiles_json(profiles), 2) + '\n' : eval::profiles_table(profiles),
       out);
  return scan_status(scan);
}

struct GenArgs {
  std::string spec, out_dir, templates;
  std::uint64_t seed = 42;
};

int cmd_gen_corpus(const GenArgs& a, std::ostream& out) {
  const auto spec = synth::CorpusSpec::load(a.spec);
  const auto manifest = a.templates.empty()
                            ? synth::generate_corpus(spec, a.seed, a.out_dir)
                            : synth::generate_corpus(spec, a.seed, a.out_dir, synth::TemplateSet::load(a.templates));
  out << "generated " << manifest.kits.size() << " kits in " << (fs::path(a.out_dir) / "kits").string()
      << " (manifest " << (fs::path(a.out_dir) / "manifest.jsonl").string() << ", seed " << a.seed << ")\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Static analysis and classification of phishing-kit archives", "kitscan"};
  app.require_subcommand(1);

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Scan one kit (archive or directory) or a corpus; JSON lines out");
  scan_cmd->add_option("path", scan.path, "kit or corpus path")->required()->check(CLI::ExistingPath);
  scan_cmd->add_flag("--corpus", scan.corpus, "treat the path as a directory of kits");
  scan_cmd->add_option("-o,--out", scan.out, "output file (default stdout)");
  scan_cmd->add_option("-j,--jobs", scan.jobs, "parallel kit scans")->check(CLI::PositiveNumber);
  add_config_flags(scan_cmd, scan.config);

  FeaturesArgs feat;
  auto* feat_cmd = app.add_subcommand("features", "Scan a corpus and write the feature matrix as CSV");
  feat_cmd->add_option("corpus", feat.corpus, "directory of kits")->required()->check(CLI::ExistingDirectory);
  feat_cmd->add_option("-o,--out", feat.out, "CSV file (default stdout)");
  feat_cmd->add_option("-j,--jobs", feat.jobs, "parallel kit scans")->check(CLI::PositiveNumber);
  add_config_flags(feat_cmd, feat.config);

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Train and evaluate the classifiers on a feature matrix");
  ev_cmd->add_option("matrix", ev.matrix, "feature matrix CSV")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--scenario", ev.scenario, "s1, s2 or s3")->required()->check(CLI::IsMember({"s1", "s2", "s3"}));
  ev_cmd->add_option("--target", ev.target, "evasive or obfuscated")
      ->required()
      ->check(CLI::IsMember({"evasive", "obfuscated"}));
  ev_cmd->add_option("--exclude", ev.exclude, "s3: technique held out of training, or all");
  ev_cmd->add_flag("--keep-multi", ev.keep_multi, "s3: keep kits that also use another technique in training");
  ev_cmd->add_option("--seed", ev.seed, "random seed")->capture_default_str();
  ev_cmd->add_option("-j,--jobs", ev.jobs, "classifiers trained in parallel")->check(CLI::PositiveNumber);
  ev_cmd->add_option("-o,--out", ev.out, "write <out>.json and <out>.txt instead of printing");
  ev_cmd->add_option("--format", ev.format, "stdout format")->check(CLI::IsMember({"table", "json"}));

  AuthorsArgs au;
  auto* au_cmd = app.add_subcommand("authors", "Author signature profiles of a corpus");
  au_cmd->add_option("corpus", au.corpus, "directory of kits")->required()->check(CLI::ExistingDirectory);
  au_cmd->add_option("--top", au.top, "rows to show (0 for all)")->capture_default_str();
  au_cmd->add_option("-o,--out", au.out, "output file (default stdout)");
  au_cmd->add_option("--format", au.format, "table or json")->check(CLI::IsMember({"table", "json"}));
  au_cmd->add_option("-j,--jobs", au.jobs, "parallel kit scans")->check(CLI::PositiveNumber);
  add_config_flags(au_cmd, au.config);
  add_curation_flags(au_cmd, au.config);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic corpus with a ground-truth manifest");
  gen_cmd->add_option("spec", gen.spec, "corpus spec JSON")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("out_dir", gen.out_dir, "destination directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--templates", gen.templates, "template directory (default built-in)")
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "kitscan: " << e.what() << '\n';
    return kExitFatal;
  }

  try {
    if (scan_cmd->parsed()) return cmd_scan(scan, out, err);
    if (feat_cmd->parsed()) return cmd_features(feat, out, err);
    if (ev_cmd->parsed()) return cmd_evaluate(ev, out);
    if (au_cmd->parsed()) return cmd_authors(au, out, err);
    if (gen_cmd->parsed()) return cmd_gen_corpus(gen, out);
  } catch (const Error& e) {
    err << "kitscan: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitFatal;
  } catch (const std::exception& e) {
    err << "kitscan: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace kitscan::cli
