#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kitscan/support/json.hpp"

namespace kitscan::ml {

inline constexpr int kModelFormatVersion = 1;

struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<int> y;  // 0 or 1
  std::vector<std::string> feature_names;
  std::vector<std::string> kit_ids;  // optional; used for canonical ordering

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dims() const noexcept { return x.empty() ? feature_names.size() : x.front().size(); }
  std::size_t positives() const noexcept;
  // Throws DimensionMismatch on ragged rows or row/target count mismatch,
  // InvalidArgument on non-binary targets or duplicated kit ids.
  void validate() const;
  // Rows in `rows` order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

enum class MaxFeatures { All, ThirdOfFeatures, SqrtOfFeatures };

// ceil(d/3) or floor(sqrt(d)), at least 1; All gives d.
std::size_t candidate_count(MaxFeatures policy, std::size_t d) noexcept;

struct TreeConfig {
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_split = 2;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  MaxFeatures max_features = MaxFeatures::SqrtOfFeatures;
  bool bootstrap = true;
};

struct SvmConfig {
  double c = 1.0;
  std::size_t epochs = 100;
  double eta0 = 0.1;
};

struct NbConfig {
  double var_smoothing = 1e-9;
};

struct TrainConfig {
  std::uint64_t seed = 42;
  TreeConfig tree;
  ForestConfig forest;
  SvmConfig svm;
  NbConfig nb;
  std::size_t jobs = 1;  // forest trees; never changes the result
};

// Filled during tree growth when requested, one entry per split search.
// `sampled` is the size of the uniformly drawn candidate subset. When none of
// those admits a threshold the search keeps drawing from the remaining
// features, so `evaluated` can exceed `sampled`.
struct SplitTrace {
  struct Split {
    std::size_t sampled = 0;
    std::size_t evaluated = 0;
  };
  std::vector<Split> splits;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t negatives = 0;
  std::uint32_t positives = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(const std::vector<double>& x) const;
  std::size_t depth() const;
};

enum class Variant { Tree, Forest, LinearSvm, GaussianNb };

std::string_view to_string(Variant v) noexcept;

struct Model {
  Variant variant = Variant::Tree;
  std::size_t dims = 0;
  std::vector<std::string> feature_names;

  std::vector<Tree> trees;  // Tree: one; Forest: n_trees

  std::vector<double> weights, mean, scale;  // LinearSvm
  double bias = 0.0;

  std::vector<double> class_prior;               // GaussianNb, [neg, pos]
  std::vector<std::vector<double>> class_mean;   // [class][feature]
  std::vector<std::vector<double>> class_var;    // smoothed

  // Tree: leaf positive fraction. Forest: fraction of trees voting positive.
  // GaussianNb: posterior P(positive). LinearSvm: signed margin.
  double predict_score(const std::vector<double>& x) const;
  // Score >= 0.5 (margin >= 0 for LinearSvm): ties go to positive.
  bool predict(const std::vector<double>& x) const;
};

// Row indices of the bootstrap sample used by forest tree `tree_index`.
std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t tree_index);

// All trainers throw DegenerateDataset unless both classes are present.
Model train_decision_tree(const Dataset& ds, const TrainConfig& cfg = {}, SplitTrace* trace = nullptr);
Model train_random_forest(const Dataset& ds, const TrainConfig& cfg = {}, SplitTrace* trace = nullptr);
Model train_linear_svm(const Dataset& ds, const TrainConfig& cfg = {});
Model train_gaussian_nb(const Dataset& ds, const TrainConfig& cfg = {});

// The fixed classifier list used by the evaluation harness.
enum class Classifier { LinearSvm, DecisionTree, RandomForest10, RandomForest100, NaiveBayes };
inline constexpr Classifier kClassifiers[] = {Classifier::LinearSvm, Classifier::DecisionTree,
                                              Classifier::RandomForest10, Classifier::RandomForest100,
                                              Classifier::NaiveBayes};
std::string_view to_string(Classifier c) noexcept;
Model train_classifier(Classifier c, const Dataset& ds, std::uint64_t seed, std::size_t jobs = 1);

Json to_json(const Model& m);
// Throws VersionMismatch for a newer format version, MalformedModel otherwise.
Model model_from_json(std::string_view text);
void save_model(const Model& m, const std::filesystem::path& destination);
Model load_model(const std::filesystem::path& source);

}  // namespace kitscan::ml
