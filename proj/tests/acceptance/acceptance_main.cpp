// End-to-end acceptance checks on generated corpora. One PASS/FAIL line per
// criterion; exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <iostream>
#include <numeric>
#include <set>
#include <tuple>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fixtures.hpp"
#include "kitscan/evaluation.hpp"
#include "kitscan/ml.hpp"
#include "kitscan/php_lexer.hpp"
#include "kitscan/pipeline.hpp"
#include "kitscan/support/io.hpp"
#include "kitscan/support/rng.hpp"
#include "kitscan/synth.hpp"

using namespace kitscan;
namespace fs = std::filesystem;
using features::LabelTechnique;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("%s  %2d  %s: %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

// Exceptions inside a check count as failure of that criterion only.
void check(int id, const std::string& title, const std::function<Verdict()>& fn) {
  try {
    report(id, title, fn());
  } catch (const std::exception& e) {
    report(id, title, {false, std::string("exception: ") + e.what()});
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<features::LabeledSample> samples_of(const pipeline::CorpusScan& scan) {
  std::vector<features::LabeledSample> out;
  for (const auto& k : scan.kits) out.push_back(k.sample());
  return out;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "kitscan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (rc != cli::kExitOk) std::cerr << err.str();
  return rc;
}

// Exact P, R, F1 from integer counts, compared as cross-multiplied fractions.
bool metrics_match(const eval::ConfusionCounts& c, const eval::MetricsReport& m) {
  const auto close = [](double got, std::uint64_t num, std::uint64_t den) {
    const double want = den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    return std::abs(got - want) <= 1e-12;
  };
  bool ok = close(m.precision, c.tp, c.tp + c.fp) && close(m.recall, c.tp, c.tp + c.fn);
  // 2PR/(P+R) = 2tp / (2tp + fp + fn) whenever tp > 0; zero otherwise.
  ok = ok && (c.tp == 0 ? m.f1 == 0.0 : close(m.f1, 2 * c.tp, 2 * c.tp + c.fp + c.fn));
  return ok;
}

bool same_files(const fs::path& a, const fs::path& b) { return io::read_file(a) == io::read_file(b); }

}  // namespace

int main() {
  testing::TempDir work;
  const auto t_all = Clock::now();

  // Criteria 1-3: 200-kit detector corpus.
  synth::CorpusSpec spec200;
  spec200.kit_count = 200;
  const auto t1 = Clock::now();
  const auto manifest200 = synth::generate_corpus(spec200, 42, work.path() / "c200");
  const auto scan200 = pipeline::scan_corpus(work.path() / "c200" / "kits", pipeline::ScanConfig{}, 1);
  const auto agreement = synth::verify_against_manifest(samples_of(scan200), manifest200);
  const double t1_secs = seconds_since(t1);

  check(1, "detector/manifest agreement (200 kits, seed 42)", [&] {
    std::size_t perfect = 0;
    std::string rates;
    for (std::size_t i = 0; i < features::kTechniqueCount; ++i) {
      const auto& t = agreement.techniques[i];
      if (t.agree == t.total && t.total == manifest200.kits.size()) ++perfect;
      rates += std::string(i ? " " : "") + std::string(features::kTechniqueShortNames[i]) + "=" +
               fmt("%.3f", t.rate());
    }
    const bool ok = perfect == features::kTechniqueCount && scan200.failures.empty() && t1_secs < 30.0;
    return Verdict{ok, rates + ", " + std::to_string(agreement.disagreements.size()) + " disagreements, " +
                           fmt("%.2f s", t1_secs)};
  });

  check(2, "near-miss resistance", [&] {
    // The seed-42 corpus has few kits without plants, so a near-miss-only
    // corpus of the same generator is checked as well.
    synth::CorpusSpec stress = spec200;
    stress.kit_count = 100;
    stress.plant_probability.fill(0.0);
    stress.near_miss_probability = 1.0;
    const auto m = synth::generate_corpus(stress, 42, work.path() / "near");
    const auto rep = synth::verify_against_manifest(
        samples_of(pipeline::scan_corpus(work.path() / "near" / "kits", pipeline::ScanConfig{}, 1)), m);
    const bool ok = agreement.near_miss_only_kits > 0 && agreement.near_miss_false_positives.empty() &&
                    rep.near_miss_only_kits == 100 && rep.near_miss_false_positives.empty();
    return Verdict{ok, std::to_string(agreement.near_miss_false_positives.size()) + " false positives on " +
                           std::to_string(agreement.near_miss_only_kits) + " near-miss-only kits; " +
                           std::to_string(rep.near_miss_false_positives.size()) + " on " +
                           std::to_string(rep.near_miss_only_kits) + " in the near-miss-only corpus"};
  });

  // Criteria 5-9, 12: 500-kit learning corpus.
  synth::CorpusSpec spec500;
  spec500.kit_count = 500;
  spec500.correlation_strength = 0.8;
  const auto t6 = Clock::now();
  const auto manifest500 = synth::generate_corpus(spec500, 42, work.path() / "c500");
  const auto scan500 = pipeline::scan_corpus(work.path() / "c500" / "kits", pipeline::ScanConfig{}, 1);
  const auto samples500 = samples_of(scan500);
  const auto s1 = eval::run_scenario1(samples500, eval::Target::Evasive);
  const double t6_secs = seconds_since(t6);

  check(3, "labeling law on every scanned kit", [&] {
    std::size_t kits = 0, bad = 0;
    for (const auto* scan : {&scan200, &scan500}) {
      for (const auto& k : scan->kits) {
        ++kits;
        const auto& ev = k.evasion.flags;
        const auto& ob = k.obfuscation.flags;
        const bool any_ev = std::find(ev.begin(), ev.end(), true) != ev.end();
        const bool any_ob = std::find(ob.begin(), ob.end(), true) != ob.end();
        const auto j = pipeline::to_json(k);
        const bool ok = k.labels.evasive == any_ev && k.labels.obfuscated == any_ob &&
                        k.evasion.is_evasive == any_ev && k.obfuscation.is_obfuscated == any_ob &&
                        j["is_evasive"].get<bool>() == any_ev && j["is_obfuscated"].get<bool>() == any_ob;
        if (!ok) ++bad;
      }
    }
    return Verdict{bad == 0 && kits == 700, std::to_string(kits - bad) + "/" + std::to_string(kits) + " kits"};
  });

  check(4, "metrics against exact fractions", [&] {
    std::vector<eval::ConfusionCounts> cases = {
        {0, 0, 0, 0}, {0, 0, 0, 9}, {0, 5, 0, 1}, {0, 0, 5, 1}, {0, 3, 4, 2}, {7, 0, 0, 0}, {3, 1, 2, 0}};
    Rng rng(20240);
    while (cases.size() < 1000) {
      cases.push_back({rng.index(4) == 0 ? 0 : rng.index(500), rng.index(4) == 0 ? 0 : rng.index(500),
                       rng.index(4) == 0 ? 0 : rng.index(500), rng.index(500)});
    }
    std::size_t zero_den = 0, bad = 0;
    for (const auto& c : cases) {
      if (c.tp + c.fp == 0 || c.tp + c.fn == 0) ++zero_den;
      if (!metrics_match(c, eval::compute_metrics(c))) ++bad;
    }
    return Verdict{bad == 0 && zero_den >= 5, std::to_string(cases.size() - bad) + "/" + std::to_string(cases.size()) +
                                                  " cases, " + std::to_string(zero_den) + " with a zero denominator"};
  });

  check(5, "forest candidate features per split at d=43", [&] {
    const auto ds = eval::to_dataset(samples500, eval::Target::Evasive);
    if (ds.dims() != 43) return Verdict{false, "dataset has " + std::to_string(ds.dims()) + " features"};
    std::string detail;
    bool ok = true;
    for (auto [c, policy, want] : {std::tuple{"RF10", ml::MaxFeatures::ThirdOfFeatures, 15u},
                                   std::tuple{"RF100", ml::MaxFeatures::SqrtOfFeatures, 6u}}) {
      ml::TrainConfig cfg;
      cfg.forest.n_trees = 10;
      cfg.forest.max_features = policy;
      ml::SplitTrace trace;
      ml::train_random_forest(ds, cfg, &trace);
      std::set<std::size_t> seen;
      for (const auto& s : trace.splits) seen.insert(s.sampled);
      ok = ok && !trace.splits.empty() && seen == std::set<std::size_t>{want};
      detail += std::string(detail.empty() ? "" : ", ") + c + " " + std::to_string(trace.splits.size()) +
                " splits sampling {";
      for (auto v : seen) detail += std::to_string(v);
      detail += "}";
    }
    return Verdict{ok, detail};
  });

  const auto rf100_f1 = [](const eval::ScenarioResult& r) {
    for (const auto& c : r.results) {
      if (c.classifier == ml::Classifier::RandomForest100) return c.metrics.f1;
    }
    return -1.0;
  };
  check(6, "S1 learnability, RF-100 evasive (500 kits)", [&] {
    const double f1 = rf100_f1(s1);
    return Verdict{f1 >= 0.90 && t6_secs < 120.0 && scan500.failures.empty(),
                   "F1 " + fmt("%.3f", f1) + ", " + fmt("%.2f s", t6_secs)};
  });

  const auto s2 = eval::run_scenario2(samples500, eval::Target::Evasive);
  check(7, "S2 robustness, RF-100 evasive", [&] {
    const double a = rf100_f1(s1), b = rf100_f1(s2);
    return Verdict{b >= a - 0.10, "S2 F1 " + fmt("%.3f", b) + " vs S1 F1 " + fmt("%.3f", a)};
  });

  std::vector<eval::ExclusionResult> s3;
  for (std::size_t i = 0; i < features::kTechniqueCount; ++i) {
    s3.push_back(eval::run_scenario3(samples500, static_cast<LabelTechnique>(i)));
  }
  check(8, "S3 generalization, RF-10 and RF-100", [&] {
    std::size_t ok_count = 0;
    std::string detail;
    for (const auto& r : s3) {
      double rf10 = 0, rf100 = 0;
      for (const auto& [c, rate] : r.detection_rate) {
        if (c == ml::Classifier::RandomForest10) rf10 = rate;
        if (c == ml::Classifier::RandomForest100) rf100 = rate;
      }
      if (rf10 >= 0.70 && rf100 >= 0.70) ++ok_count;
      detail += std::string(features::short_name(r.excluded)) + " " + fmt("%.2f", rf10) + "/" + fmt("%.2f", rf100) + " ";
    }
    return Verdict{ok_count >= 6, std::to_string(ok_count) + "/8 techniques at >= 0.70 (" + detail + "rf10/rf100)"};
  });

  check(9, "balanced, disjoint and leak-free splits", [&] {
    std::size_t runs = 0, bad = 0;
    std::vector<eval::ScenarioResult> split_runs = {s1, s2};
    for (auto target : {eval::Target::Obfuscated}) {
      split_runs.push_back(eval::run_scenario1(samples500, target));
      split_runs.push_back(eval::run_scenario2(samples500, target));
    }
    std::map<std::string, const features::LabeledSample*> by_id;
    for (const auto& s : samples500) by_id[s.kit_id] = &s;
    for (const auto& r : split_runs) {
      ++runs;
      const std::set<std::string> train(r.train_ids.begin(), r.train_ids.end());
      std::size_t pos = 0;
      for (const auto& id : r.train_ids) {
        const auto& l = by_id.at(id)->labels;
        pos += (r.target == eval::Target::Evasive ? l.evasive : l.obfuscated) ? 1 : 0;
      }
      const bool disjoint = std::none_of(r.test_ids.begin(), r.test_ids.end(),
                                         [&](const std::string& id) { return train.count(id) > 0; });
      const bool balanced = r.train_positive == r.train_negative && 2 * pos == r.train_ids.size();
      if (!disjoint || !balanced || train.size() != r.train_ids.size()) ++bad;
    }
    for (const auto& r : s3) {
      ++runs;
      const std::set<std::string> train(r.train_ids.begin(), r.train_ids.end());
      std::size_t using_it = 0;
      bool leak = false;
      for (const auto& s : samples500) {
        if (!s.labels.has(r.excluded)) continue;
        ++using_it;
        leak = leak || train.count(s.kit_id) > 0;
      }
      if (leak || using_it != r.test_ids.size() || r.train_positive != r.train_negative) ++bad;
    }
    return Verdict{bad == 0, std::to_string(runs - bad) + "/" + std::to_string(runs) + " runs satisfy the laws"};
  });

  check(10, "byte-identical reruns and --jobs invariance", [&] {
    const auto tmp = work.path() / "det";
    fs::create_directories(tmp);
    const auto s200 = work.write("det/spec200.json", dump_json(synth::to_json(spec200))).string();
    const auto s500 = work.write("det/spec500.json", dump_json(synth::to_json(spec500))).string();
    // Three runs through the command line: jobs 1, jobs 4, jobs 1 again.
    const std::vector<std::string> jobs = {"1", "4", "1"};
    std::vector<std::string> produced;
    int rc_bad = 0;
    for (std::size_t r = 0; r < jobs.size(); ++r) {
      const auto dir = tmp / ("run" + std::to_string(r));
      const auto d = dir.string();
      rc_bad += run_cli({"gen-corpus", s200, d + "/c200", "--seed", "42"}) != 0;
      const auto scan = pipeline::scan_corpus(dir / "c200" / "kits", pipeline::ScanConfig{}, std::stoul(jobs[r]));
      const auto rep = synth::verify_against_manifest(samples_of(scan), synth::load_manifest(dir / "c200" / "manifest.jsonl"));
      io::write_file(dir / "agreement.json", dump_json(synth::to_json(rep), 2));
      rc_bad += run_cli({"scan", "--corpus", d + "/c200/kits", "-j", jobs[r], "-o", d + "/scan200.jsonl"}) != 0;
      rc_bad += run_cli({"gen-corpus", s500, d + "/c500", "--seed", "42"}) != 0;
      rc_bad += run_cli({"features", d + "/c500/kits", "-j", jobs[r], "-o", d + "/m500.csv"}) != 0;
      rc_bad += run_cli({"evaluate", d + "/m500.csv", "--scenario", "s1", "--target", "evasive", "-j", jobs[r], "-o",
                     d + "/s1"}) != 0;
      rc_bad += run_cli({"evaluate", d + "/m500.csv", "--scenario", "s3", "--target", "evasive", "--exclude", "all", "-j",
                     jobs[r], "-o", d + "/s3_evasive"}) != 0;
      rc_bad += run_cli({"evaluate", d + "/m500.csv", "--scenario", "s3", "--target", "obfuscated", "--exclude", "all",
                     "-j", jobs[r], "-o", d + "/s3_obfuscated"}) != 0;
    }
    const std::vector<std::string> files = {"c200/manifest.jsonl", "agreement.json",       "scan200.jsonl",
                                            "c500/manifest.jsonl", "m500.csv",             "s1.json",
                                            "s1.txt",              "s3_evasive.json",      "s3_evasive.txt",
                                            "s3_obfuscated.json",  "s3_obfuscated.txt"};
    std::size_t identical = 0;
    for (const auto& f : files) {
      if (same_files(tmp / "run0" / f, tmp / "run1" / f) && same_files(tmp / "run0" / f, tmp / "run2" / f)) {
        ++identical;
      }
    }
    const bool trees = testing::snapshot_tree(tmp / "run0" / "c500") == testing::snapshot_tree(tmp / "run2" / "c500");
    return Verdict{rc_bad == 0 && identical == files.size() && trees,
                   std::to_string(identical) + "/" + std::to_string(files.size()) +
                       " report files identical across 3 runs (jobs 1/4/1), corpus trees " +
                       (trees ? "identical" : "differ")};
  });

  check(11, "lexer totality and round-trip (10 000 inputs)", [&] {
    Rng rng(11);
    const std::vector<std::string> pieces = {"<?php ", "<?=", "<?", "?>", "<<<EOT\n", "\nEOT;\n", "<<<'N'\n",
                                             "\nN\n", "<<<\"Q\"\n", "/*", "*/", "//", "#", "'", "\"", "`",
                                             "${", "{$", "}", "\\", "$x", "->", "::", "\r\n", "0x1F", "1e5"};
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
      std::string src;
      const std::size_t len = rng.index(200);
      for (std::size_t k = 0; k < len; ++k) {
        if (rng.chance(0.25)) {
          src += pieces[rng.index(pieces.size())];
        } else {
          src.push_back(static_cast<char>(rng.index(256)));
        }
      }
      const auto r = php::tokenize_php(src);
      std::string joined;
      for (const auto& t : r.tokens) joined += t.text;
      if (joined != src) ++bad;
    }
    return Verdict{bad == 0, std::to_string(10000 - bad) + "/10000 inputs round-trip"};
  });

  check(12, "model save/load round-trip (5 classifiers x 100 vectors)", [&] {
    const auto split = eval::split_balanced(eval::to_dataset(samples500, eval::Target::Evasive), 0.8, 42);
    Rng rng(12);
    std::vector<std::vector<double>> probes(100, std::vector<double>(features::kFeatureCount));
    for (auto& p : probes) {
      for (std::size_t j = 0; j < p.size(); ++j) p[j] = static_cast<double>(rng.index(j < 13 ? 40 : 2));
    }
    std::size_t exact = 0;
    for (auto c : ml::kClassifiers) {
      const auto model = ml::train_classifier(c, split.train, 42, 1);
      const auto path = work.path() / ("model_" + std::string(ml::to_string(c)) + ".json");
      ml::save_model(model, path);
      const auto back = ml::load_model(path);
      bool same = true;
      for (const auto& p : probes) {
        same = same && model.predict_score(p) == back.predict_score(p) && model.predict(p) == back.predict(p);
      }
      exact += same ? 1 : 0;
    }
    return Verdict{exact == 5, std::to_string(exact) + "/5 variants predict identically"};
  });

  std::printf("%d of 12 criteria failed (%.1f s)\n", failures, seconds_since(t_all));
  return failures == 0 ? 0 : 1;
}
