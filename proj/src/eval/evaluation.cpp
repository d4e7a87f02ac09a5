#include "kitscan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "kitscan/error.hpp"
#include "kitscan/support/parallel.hpp"
#include "kitscan/support/rng.hpp"
#include "kitscan/support/text.hpp"

namespace kitscan::eval {

namespace {

using features::LabelTechnique;

double ratio(std::uint64_t num, std::uint64_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Harness invariants; a violation is a bug here, not bad input.
void ensure(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("evaluation invariant violated: ") + what);
}

bool disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string_view> left(a.begin(), a.end());
  return std::none_of(b.begin(), b.end(), [&](const std::string& id) { return left.count(id) > 0; });
}

std::vector<std::size_t> by_kit_id(const ml::Dataset& ds, std::vector<std::size_t> rows) {
  if (!ds.kit_ids.empty()) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return ds.kit_ids[a] < ds.kit_ids[b]; });
  } else {
    std::sort(rows.begin(), rows.end());
  }
  return rows;
}

std::size_t count_positive(const ml::Dataset& ds) { return ds.positives(); }

// Trains every requested classifier; results land in request order.
std::vector<ml::Model> train_all(const ml::Dataset& train, const RunOptions& opt) {
  std::vector<ml::Model> models(opt.classifiers.size());
  parallel_for(models.size(), opt.jobs, [&](std::size_t i) {
    models[i] = ml::train_classifier(opt.classifiers[i], train, opt.seed);
  });
  return models;
}

ScenarioResult run_split_scenario(const std::vector<features::LabeledSample>& samples, Target target,
                                  Scenario scenario, const RunOptions& opt) {
  const auto ds = to_dataset(samples, target);
  auto split = split_balanced(ds, train_fraction(scenario), opt.seed);
  ensure(split.train_positive == split.train_negative, "training classes are unbalanced");
  ensure(disjoint(split.train.kit_ids, split.test.kit_ids), "train and test share a kit");
  if (split.test.size() == 0) throw Error(ErrorCode::EmptyTestSet, "split left no samples to test on");

  ScenarioResult r;
  r.scenario = scenario;
  r.target = target;
  r.seed = opt.seed;
  r.train_positive = split.train_positive;
  r.train_negative = split.train_negative;
  r.test_positive = split.test_positive;
  r.test_negative = split.test_negative;
  const auto models = train_all(split.train, opt);
  for (std::size_t i = 0; i < models.size(); ++i) {
    ConfusionCounts c;
    for (std::size_t k = 0; k < split.test.size(); ++k) {
      const bool predicted = models[i].predict(split.test.x[k]);
      const bool actual = split.test.y[k] != 0;
      if (predicted && actual) ++c.tp;
      else if (predicted) ++c.fp;
      else if (actual) ++c.fn;
      else ++c.tn;
    }
    r.results.push_back({opt.classifiers[i], compute_metrics(c)});
  }
  r.train_ids = std::move(split.train.kit_ids);
  r.test_ids = std::move(split.test.kit_ids);
  return r;
}

std::vector<LabelTechnique> family(Target t) {
  std::vector<LabelTechnique> out;
  for (std::size_t i = 0; i < features::kTechniqueCount; ++i) {
    const auto tech = static_cast<LabelTechnique>(i);
    if (features::is_evasion_technique(tech) == (t == Target::Evasive)) out.push_back(tech);
  }
  return out;
}

Target family_of(LabelTechnique t) { return features::is_evasion_technique(t) ? Target::Evasive : Target::Obfuscated; }

std::string fmt(const char* pattern, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string pad(std::string_view s, std::size_t width, bool left_align) {
  std::string out(s);
  if (out.size() >= width) return out;
  const std::string fill(width - out.size(), ' ');
  return left_align ? out + fill : fill + out;
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) line += "  ";
      line += pad(rows[r][c], width[c], c == 0);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  return out;
}

}  // namespace

MetricsReport compute_metrics(const ConfusionCounts& c) noexcept {
  MetricsReport m;
  m.counts = c;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  // 2PR/(P+R) = 2tp/(2tp+fp+fn) whenever P+R > 0; the integer form is exact.
  m.f1 = m.precision + m.recall > 0.0 ? ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn) : 0.0;
  return m;
}

std::string_view to_string(Target t) noexcept { return t == Target::Evasive ? "evasive" : "obfuscated"; }

std::optional<Target> parse_target(std::string_view s) noexcept {
  if (text::iequals(s, "evasive") || text::iequals(s, "evasion")) return Target::Evasive;
  if (text::iequals(s, "obfuscated") || text::iequals(s, "obfuscation")) return Target::Obfuscated;
  return std::nullopt;
}

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::S3: return "S3";
  }
  return "?";
}

double train_fraction(Scenario s) {
  switch (s) {
    case Scenario::S1: return 0.8;
    case Scenario::S2: return 0.2;
    case Scenario::S3: break;
  }
  throw Error(ErrorCode::InvalidArgument, "S3 has no fixed training fraction");
}

ml::Dataset to_dataset(const std::vector<features::LabeledSample>& samples, Target target) {
  ml::Dataset ds;
  ds.feature_names.assign(features::kFeatureNames.begin(), features::kFeatureNames.end());
  for (const auto& s : samples) {
    std::vector<double> row(features::kFeatureCount);
    for (std::size_t f = 0; f < features::kFeatureCount; ++f) row[f] = static_cast<double>(s.features[f]);
    ds.x.push_back(std::move(row));
    ds.y.push_back((target == Target::Evasive ? s.labels.evasive : s.labels.obfuscated) ? 1 : 0);
    ds.kit_ids.push_back(s.kit_id);
  }
  ds.validate();
  return ds;
}

Split split_balanced(const ml::Dataset& ds, double fraction, std::uint64_t seed) {
  ds.validate();
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidArgument, "train fraction must be in (0,1]");
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  all = by_kit_id(ds, std::move(all));
  std::vector<std::size_t> pos, neg;
  for (auto r : all) (ds.y[r] != 0 ? pos : neg).push_back(r);
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::DegenerateDataset, "split needs both classes (" + std::to_string(pos.size()) +
                                                  " positive, " + std::to_string(neg.size()) + " negative)");
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(pos));
  rng.shuffle(std::span<std::size_t>(neg));
  const auto take = [&](std::size_t count) {
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count)));
    return std::clamp<std::size_t>(k, 1, count);
  };
  // The pool is a random prefix of each shuffled class, so keeping the first
  // `balanced` of the majority is a uniform draw without replacement.
  const std::size_t balanced = std::min(take(pos.size()), take(neg.size()));
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < pos.size(); ++i) (i < balanced ? train : test).push_back(pos[i]);
  for (std::size_t i = 0; i < neg.size(); ++i) (i < balanced ? train : test).push_back(neg[i]);

  Split s;
  s.train = ds.subset(by_kit_id(ds, std::move(train)));
  s.test = ds.subset(by_kit_id(ds, std::move(test)));
  s.train_positive = count_positive(s.train);
  s.train_negative = s.train.size() - s.train_positive;
  s.test_positive = count_positive(s.test);
  s.test_negative = s.test.size() - s.test_positive;
  return s;
}

ScenarioResult run_scenario1(const std::vector<features::LabeledSample>& samples, Target target,
                             const RunOptions& opt) {
  return run_split_scenario(samples, target, Scenario::S1, opt);
}

ScenarioResult run_scenario2(const std::vector<features::LabeledSample>& samples, Target target,
                             const RunOptions& opt) {
  return run_split_scenario(samples, target, Scenario::S2, opt);
}

ExclusionResult run_scenario3(const std::vector<features::LabeledSample>& samples, LabelTechnique excluded,
                              const Scenario3Options& opt) {
  const Target target = family_of(excluded);
  const auto techniques = family(target);
  std::vector<features::LabeledSample> pool, held_out;
  for (const auto& s : samples) {
    if (!s.labels.has(excluded)) {
      pool.push_back(s);
      continue;
    }
    const bool others = std::any_of(techniques.begin(), techniques.end(),
                                    [&](LabelTechnique t) { return t != excluded && s.labels.has(t); });
    (opt.keep_multi_technique_in_training && others ? pool : held_out).push_back(s);
  }
  if (held_out.empty()) {
    throw Error(ErrorCode::EmptyTestSet,
                "no kit uses the excluded technique '" + std::string(features::short_name(excluded)) + "'");
  }
  // Relabel the training pool as if the excluded technique were unknown.
  for (auto& s : pool) {
    bool positive = false;
    for (auto t : techniques) positive = positive || (t != excluded && s.labels.has(t));
    s.labels.techniques[static_cast<std::size_t>(excluded)] = false;
    (target == Target::Evasive ? s.labels.evasive : s.labels.obfuscated) = positive;
  }

  const auto split = split_balanced(to_dataset(pool, target), 1.0, opt.run.seed);
  ExclusionResult r;
  r.excluded = excluded;
  r.test_kits = held_out.size();
  r.train_positive = split.train_positive;
  r.train_negative = split.train_negative;
  r.train_ids = split.train.kit_ids;
  for (const auto& s : held_out) r.test_ids.push_back(s.kit_id);
  ensure(r.train_positive == r.train_negative, "training classes are unbalanced");
  ensure(disjoint(r.train_ids, r.test_ids), "a held-out kit is in training");
  if (!opt.keep_multi_technique_in_training) {
    const std::set<std::string_view> train(r.train_ids.begin(), r.train_ids.end());
    for (const auto& s : samples) ensure(!(s.labels.has(excluded) && train.count(s.kit_id) > 0), "excluded-technique kit in training");
  }

  const auto test = to_dataset(held_out, target);
  const auto models = train_all(split.train, opt.run);
  for (std::size_t i = 0; i < models.size(); ++i) {
    std::size_t detected = 0;
    for (const auto& x : test.x) detected += models[i].predict(x) ? 1 : 0;
    r.detection_rate.emplace_back(opt.run.classifiers[i], ratio(detected, test.size()));
  }
  return r;
}

Scenario3Result run_scenario3_family(const std::vector<features::LabeledSample>& samples, Target target,
                                     const Scenario3Options& opt, std::optional<LabelTechnique> only) {
  Scenario3Result r;
  r.target = target;
  r.seed = opt.run.seed;
  r.keep_multi_technique_in_training = opt.keep_multi_technique_in_training;
  if (only && family_of(*only) != target) {
    throw Error(ErrorCode::InvalidArgument, "technique '" + std::string(features::short_name(*only)) +
                                                "' does not belong to target " + std::string(to_string(target)));
  }
  for (auto t : family(target)) {
    if (only && t != *only) continue;
    r.exclusions.push_back(run_scenario3(samples, t, opt));
  }
  return r;
}

std::string_view display_name(ml::Classifier c) noexcept {
  switch (c) {
    case ml::Classifier::LinearSvm: return "Linear SVM";
    case ml::Classifier::DecisionTree: return "Decision Tree";
    case ml::Classifier::RandomForest10: return "Random Forest 10";
    case ml::Classifier::RandomForest100: return "Random Forest 100";
    case ml::Classifier::NaiveBayes: return "Naive Bayes";
  }
  return "?";
}

Json to_json(const ScenarioResult& r) {
  Json classifiers = Json::array();
  for (const auto& c : r.results) {
    const auto& m = c.metrics;
    classifiers.push_back(Json{{"classifier", ml::to_string(c.classifier)},
                               {"f1", m.f1},
                               {"precision", m.precision},
                               {"recall", m.recall},
                               {"tp", m.counts.tp},
                               {"fp", m.counts.fp},
                               {"fn", m.counts.fn},
                               {"tn", m.counts.tn}});
  }
  return Json{{"schema_version", kReportSchemaVersion},
              {"scenario", to_string(r.scenario)},
              {"target", to_string(r.target)},
              {"seed", r.seed},
              {"train_fraction", train_fraction(r.scenario)},
              {"splits",
               {{"train_positive", r.train_positive},
                {"train_negative", r.train_negative},
                {"test_positive", r.test_positive},
                {"test_negative", r.test_negative}}},
              {"classifiers", std::move(classifiers)}};
}

Json to_json(const Scenario3Result& r) {
  Json exclusions = Json::array();
  for (const auto& e : r.exclusions) {
    Json rates = Json::object();
    for (const auto& [c, rate] : e.detection_rate) rates[std::string(ml::to_string(c))] = rate;
    exclusions.push_back(Json{{"technique", features::short_name(e.excluded)},
                              {"test_kits", e.test_kits},
                              {"train_positive", e.train_positive},
                              {"train_negative", e.train_negative},
                              {"detection_rate", std::move(rates)}});
  }
  return Json{{"schema_version", kReportSchemaVersion},
              {"scenario", "S3"},
              {"target", to_string(r.target)},
              {"seed", r.seed},
              {"keep_multi_technique_in_training", r.keep_multi_technique_in_training},
              {"exclusions", std::move(exclusions)}};
}

std::string text_table(const ScenarioResult& r) {
  std::vector<std::vector<std::string>> rows = {{"Classifier", "F1-score", "Precision", "Recall"}};
  for (const auto& c : r.results) {
    rows.push_back({std::string(display_name(c.classifier)), fmt("%.3f", c.metrics.f1), fmt("%.3f", c.metrics.precision),
                    fmt("%.3f", c.metrics.recall)});
  }
  std::string head = "Scenario " + std::string(to_string(r.scenario)).substr(1) + ", " + std::string(to_string(r.target)) +
                     " kits (seed " + std::to_string(r.seed) + ")\n";
  head += "train " + std::to_string(r.train_positive) + " pos / " + std::to_string(r.train_negative) + " neg, test " +
          std::to_string(r.test_positive) + " pos / " + std::to_string(r.test_negative) + " neg\n\n";
  return head + render(rows);
}

std::string text_table(const Scenario3Result& r) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"Classifier"};
  for (const auto& e : r.exclusions) header.emplace_back(features::short_name(e.excluded));
  rows.push_back(header);
  if (!r.exclusions.empty()) {
    for (std::size_t i = 0; i < r.exclusions.front().detection_rate.size(); ++i) {
      std::vector<std::string> row = {std::string(display_name(r.exclusions.front().detection_rate[i].first))};
      for (const auto& e : r.exclusions) row.push_back(fmt("%.0f%%", 100.0 * e.detection_rate[i].second));
      rows.push_back(row);
    }
  }
  std::string head = "Scenario 3, detection rate per excluded " + std::string(to_string(r.target)) +
                     " technique (seed " + std::to_string(r.seed) + ")\n";
  for (const auto& e : r.exclusions) {
    head += std::string(features::short_name(e.excluded)) + ": " + std::to_string(e.test_kits) + " test kits, train " +
            std::to_string(e.train_positive) + " pos / " + std::to_string(e.train_negative) + " neg\n";
  }
  return head + "\n" + render(rows);
}

std::vector<authors::Profile> profile_report(const std::vector<authors::KitSignatures>& kits,
                                             const authors::Curation& curation, std::size_t top_n) {
  auto profiles = authors::build_author_profiles(kits, curation);
  if (top_n > 0 && profiles.size() > top_n) profiles.resize(top_n);
  return profiles;
}

Json profiles_json(const std::vector<authors::Profile>& profiles) {
  Json list = Json::array();
  for (const auto& p : profiles) list.push_back(authors::to_json(p));
  return Json{{"schema_version", kReportSchemaVersion}, {"profiles", std::move(list)}};
}

std::string profiles_table(const std::vector<authors::Profile>& profiles) {
  std::vector<std::vector<std::string>> rows = {{"Signature", "Kits", "Evasive", "Obfuscated"}};
  for (const auto& p : profiles) {
    rows.push_back({p.name, std::to_string(p.kit_count), fmt("%.0f%%", 100.0 * p.evasive_rate),
                    fmt("%.0f%%", 100.0 * p.obfuscated_rate)});
  }
  return render(rows);
}

}  // namespace kitscan::eval
