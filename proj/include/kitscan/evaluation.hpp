#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/authors.hpp"
#include "kitscan/features.hpp"
#include "kitscan/ml.hpp"
#include "kitscan/support/json.hpp"

namespace kitscan::eval {

inline constexpr int kReportSchemaVersion = 1;

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

// Zero denominators give 0 for the affected metric.
MetricsReport compute_metrics(const ConfusionCounts& counts) noexcept;

enum class Target { Evasive, Obfuscated };
std::string_view to_string(Target t) noexcept;
std::optional<Target> parse_target(std::string_view s) noexcept;

// Feature matrix with the chosen label as target, rows in sample order.
ml::Dataset to_dataset(const std::vector<features::LabeledSample>& samples, Target target);

struct Split {
  ml::Dataset train, test;
  std::size_t train_positive = 0, train_negative = 0;
  std::size_t test_positive = 0, test_negative = 0;
};

// Per class, a seeded shuffle takes round(fraction * count) samples (at least
// one, at most all) into the training pool; the pool's majority class is then
// cut to the minority count. Everything not trained on is the test set. Rows
// of both parts are ordered by kit_id. Throws DegenerateDataset.
Split split_balanced(const ml::Dataset& ds, double train_fraction, std::uint64_t seed);

struct ClassifierMetrics {
  ml::Classifier classifier;
  MetricsReport metrics;
};

enum class Scenario { S1, S2, S3 };
std::string_view to_string(Scenario s) noexcept;
double train_fraction(Scenario s);  // S1: 0.8, S2: 0.2

struct ScenarioResult {
  Scenario scenario = Scenario::S1;
  Target target = Target::Evasive;
  std::uint64_t seed = 0;
  std::size_t train_positive = 0, train_negative = 0;
  std::size_t test_positive = 0, test_negative = 0;
  std::vector<ClassifierMetrics> results;  // in the order requested
  std::vector<std::string> train_ids, test_ids;
};

struct RunOptions {
  std::vector<ml::Classifier> classifiers{std::begin(ml::kClassifiers), std::end(ml::kClassifiers)};
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
};

ScenarioResult run_scenario1(const std::vector<features::LabeledSample>& samples, Target target,
                             const RunOptions& opt = {});
ScenarioResult run_scenario2(const std::vector<features::LabeledSample>& samples, Target target,
                             const RunOptions& opt = {});

struct ExclusionResult {
  features::LabelTechnique excluded;
  std::size_t test_kits = 0;
  std::size_t train_positive = 0, train_negative = 0;
  std::vector<std::pair<ml::Classifier, double>> detection_rate;
  std::vector<std::string> train_ids, test_ids;
};

struct Scenario3Options {
  RunOptions run;
  // By default every kit using the excluded technique is held out for
  // testing. With this set, only kits whose sole technique of that family is
  // the excluded one are held out; the rest stay in training with the
  // excluded technique ignored when labeling.
  bool keep_multi_technique_in_training = false;
};

// Throws EmptyTestSet when no kit uses `excluded`, DegenerateDataset when the
// relabeled training pool lacks a class.
ExclusionResult run_scenario3(const std::vector<features::LabeledSample>& samples, features::LabelTechnique excluded,
                              const Scenario3Options& opt = {});

struct Scenario3Result {
  Target target = Target::Evasive;
  std::uint64_t seed = 0;
  bool keep_multi_technique_in_training = false;
  std::vector<ExclusionResult> exclusions;
};

// Every technique of the target family, or only `only` when given.
Scenario3Result run_scenario3_family(const std::vector<features::LabeledSample>& samples, Target target,
                                     const Scenario3Options& opt = {},
                                     std::optional<features::LabelTechnique> only = std::nullopt);

std::string_view display_name(ml::Classifier c) noexcept;

Json to_json(const ScenarioResult& r);
Json to_json(const Scenario3Result& r);
std::string text_table(const ScenarioResult& r);
std::string text_table(const Scenario3Result& r);

// Top-N author profiles (all when top_n is 0).
std::vector<authors::Profile> profile_report(const std::vector<authors::KitSignatures>& kits,
                                             const authors::Curation& curation = {}, std::size_t top_n = 5);
Json profiles_json(const std::vector<authors::Profile>& profiles);
std::string profiles_table(const std::vector<authors::Profile>& profiles);

}  // namespace kitscan::eval
