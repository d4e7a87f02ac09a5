#include <cmath>
#include <numbers>

#include "kitscan/error.hpp"
#include "kitscan/ml.hpp"
#include "kitscan/support/io.hpp"
#include "train_common.hpp"

namespace kitscan::ml {

namespace {

constexpr std::string_view kFormat = "kitscan-model";

double nb_log_likelihood(const Model& m, int c, const std::vector<double>& x) {
  double l = std::log(m.class_prior[c]);
  for (std::size_t f = 0; f < m.dims; ++f) {
    const double var = m.class_var[c][f];
    const double diff = x[f] - m.class_mean[c][f];
    l += -0.5 * std::log(2.0 * std::numbers::pi * var) - diff * diff / (2.0 * var);
  }
  return l;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedModel, "malformed model: " + what); }

const Json& field(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

std::size_t as_size(const Json& v, const char* what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    malformed(std::string(what) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const Json& v, const char* what) {
  if (!v.is_number()) malformed(std::string(what) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) malformed(std::string(what) + " must be finite");
  return d;
}

std::vector<double> reals(const Json& v, std::size_t expected, const char* what) {
  if (!v.is_array() || v.size() != expected) malformed(std::string(what) + " must be an array of " + std::to_string(expected));
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& e : v) out.push_back(as_real(e, what));
  return out;
}

Json tree_json(const Tree& t) {
  Json nodes = Json::array();
  for (const auto& n : t.nodes) nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.negatives, n.positives}));
  return nodes;
}

Tree tree_from_json(const Json& v, std::size_t dims) {
  if (!v.is_array() || v.empty()) malformed("tree must be a non-empty node array");
  Tree t;
  const std::size_t count = v.size();
  for (std::size_t i = 0; i < count; ++i) {
    const Json& n = v[i];
    if (!n.is_array() || n.size() != 6) malformed("tree node must have 6 fields");
    TreeNode node;
    if (!n[0].is_number_integer()) malformed("node feature must be an integer");
    const auto feature = n[0].get<std::int64_t>();
    node.threshold = as_real(n[1], "node threshold");
    if (!n[2].is_number_integer() || !n[3].is_number_integer()) malformed("node children must be integers");
    const auto left = n[2].get<std::int64_t>();
    const auto right = n[3].get<std::int64_t>();
    node.negatives = static_cast<std::uint32_t>(as_size(n[4], "node count"));
    node.positives = static_cast<std::uint32_t>(as_size(n[5], "node count"));
    if (feature == -1) {
      if (left != -1 || right != -1) malformed("leaf with children");
      if (node.negatives + node.positives == 0) malformed("empty leaf");
    } else {
      // Children after their parent rules out cycles.
      if (feature < 0 || static_cast<std::size_t>(feature) >= dims) malformed("node feature out of range");
      const auto in_range = [&](std::int64_t c) { return c > static_cast<std::int64_t>(i) && c < static_cast<std::int64_t>(count); };
      if (!in_range(left) || !in_range(right) || left == right) malformed("node child out of range");
    }
    node.feature = static_cast<int>(feature);
    node.left = static_cast<std::int32_t>(left);
    node.right = static_cast<std::int32_t>(right);
    t.nodes.push_back(node);
  }
  return t;
}

Model parse_model(const Json& j) {
  if (!j.is_object()) malformed("top level must be an object");
  const Json& format = field(j, "format");
  if (!format.is_string() || format.get<std::string>() != kFormat) malformed("not a kitscan model");
  const Json& version = field(j, "version");
  if (!version.is_number_integer()) malformed("version must be an integer");
  const auto ver = version.get<std::int64_t>();
  if (ver > kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(ver) +
                                                " is newer than supported version " +
                                                std::to_string(kModelFormatVersion));
  }
  if (ver < 1) malformed("bad version " + std::to_string(ver));

  Model m;
  const Json& variant = field(j, "variant");
  if (!variant.is_string()) malformed("variant must be a string");
  const auto vname = variant.get<std::string>();
  if (vname == "tree") m.variant = Variant::Tree;
  else if (vname == "forest") m.variant = Variant::Forest;
  else if (vname == "linear_svm") m.variant = Variant::LinearSvm;
  else if (vname == "gaussian_nb") m.variant = Variant::GaussianNb;
  else malformed("unknown variant '" + vname + "'");

  m.dims = as_size(field(j, "dims"), "dims");
  if (m.dims == 0) malformed("dims must be positive");
  const Json& names = field(j, "feature_names");
  if (!names.is_array() || (!names.empty() && names.size() != m.dims)) malformed("feature_names length");
  for (const auto& n : names) {
    if (!n.is_string()) malformed("feature name must be a string");
    m.feature_names.push_back(n.get<std::string>());
  }

  const Json& params = field(j, "params");
  if (!params.is_object()) malformed("params must be an object");
  switch (m.variant) {
    case Variant::Tree:
    case Variant::Forest: {
      const Json& trees = field(params, "trees");
      if (!trees.is_array() || trees.empty()) malformed("trees must be a non-empty array");
      if (m.variant == Variant::Tree && trees.size() != 1) malformed("tree model holds exactly one tree");
      for (const auto& t : trees) m.trees.push_back(tree_from_json(t, m.dims));
      break;
    }
    case Variant::LinearSvm:
      m.weights = reals(field(params, "weights"), m.dims, "weights");
      m.mean = reals(field(params, "mean"), m.dims, "mean");
      m.scale = reals(field(params, "scale"), m.dims, "scale");
      for (double s : m.scale) {
        if (!(s > 0.0)) malformed("scale must be positive");
      }
      m.bias = as_real(field(params, "bias"), "bias");
      break;
    case Variant::GaussianNb: {
      m.class_prior = reals(field(params, "prior"), 2, "prior");
      for (double p : m.class_prior) {
        if (!(p > 0.0 && p < 1.0)) malformed("prior must be in (0,1)");
      }
      const Json& means = field(params, "mean");
      const Json& vars = field(params, "var");
      if (!means.is_array() || means.size() != 2 || !vars.is_array() || vars.size() != 2) malformed("nb class arrays");
      for (std::size_t c = 0; c < 2; ++c) {
        m.class_mean.push_back(reals(means[c], m.dims, "mean"));
        m.class_var.push_back(reals(vars[c], m.dims, "var"));
        for (double v : m.class_var.back()) {
          if (!(v > 0.0)) malformed("variance must be positive");
        }
      }
      break;
    }
  }
  return m;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::Tree: return "tree";
    case Variant::Forest: return "forest";
    case Variant::LinearSvm: return "linear_svm";
    case Variant::GaussianNb: return "gaussian_nb";
  }
  return "unknown";
}

std::string_view to_string(Classifier c) noexcept {
  switch (c) {
    case Classifier::LinearSvm: return "LinearSVM";
    case Classifier::DecisionTree: return "DecisionTree";
    case Classifier::RandomForest10: return "RF10";
    case Classifier::RandomForest100: return "RF100";
    case Classifier::NaiveBayes: return "NaiveBayes";
  }
  return "unknown";
}

double Model::predict_score(const std::vector<double>& x) const {
  detail::check_dims(*this, x);
  switch (variant) {
    case Variant::Tree: {
      const auto& leaf = trees.front().leaf_for(x);
      return static_cast<double>(leaf.positives) / static_cast<double>(leaf.positives + leaf.negatives);
    }
    case Variant::Forest: {
      std::size_t votes = 0;
      for (const auto& t : trees) {
        const auto& leaf = t.leaf_for(x);
        // Leaf majority with ties to positive: 2p >= p + n.
        votes += leaf.positives >= leaf.negatives ? 1 : 0;
      }
      return static_cast<double>(votes) / static_cast<double>(trees.size());
    }
    case Variant::LinearSvm: {
      double margin = bias;
      for (std::size_t f = 0; f < dims; ++f) margin += weights[f] * ((x[f] - mean[f]) / scale[f]);
      return margin;
    }
    case Variant::GaussianNb: {
      const double l0 = nb_log_likelihood(*this, 0, x);
      const double l1 = nb_log_likelihood(*this, 1, x);
      return 1.0 / (1.0 + std::exp(l0 - l1));
    }
  }
  return 0.0;
}

bool Model::predict(const std::vector<double>& x) const {
  const double s = predict_score(x);
  if (variant == Variant::LinearSvm) return s >= 0.0;
  if (variant == Variant::Forest) {
    // Exact vote comparison rather than through the rounded fraction.
    std::size_t votes = 0;
    for (const auto& t : trees) {
      const auto& leaf = t.leaf_for(x);
      votes += leaf.positives >= leaf.negatives ? 1 : 0;
    }
    return 2 * votes >= trees.size();
  }
  if (variant == Variant::Tree) {
    const auto& leaf = trees.front().leaf_for(x);
    return leaf.positives >= leaf.negatives;
  }
  return s >= 0.5;
}

Model train_classifier(Classifier c, const Dataset& ds, std::uint64_t seed, std::size_t jobs) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.jobs = jobs;
  switch (c) {
    case Classifier::LinearSvm: return train_linear_svm(ds, cfg);
    case Classifier::DecisionTree: return train_decision_tree(ds, cfg);
    case Classifier::RandomForest10:
      cfg.forest.n_trees = 10;
      cfg.forest.max_features = MaxFeatures::ThirdOfFeatures;
      return train_random_forest(ds, cfg);
    case Classifier::RandomForest100:
      cfg.forest.n_trees = 100;
      cfg.forest.max_features = MaxFeatures::SqrtOfFeatures;
      return train_random_forest(ds, cfg);
    case Classifier::NaiveBayes: return train_gaussian_nb(ds, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown classifier");
}

Json to_json(const Model& m) {
  Json params = Json::object();
  switch (m.variant) {
    case Variant::Tree:
    case Variant::Forest: {
      Json trees = Json::array();
      for (const auto& t : m.trees) trees.push_back(tree_json(t));
      params["trees"] = std::move(trees);
      break;
    }
    case Variant::LinearSvm:
      params["weights"] = m.weights;
      params["bias"] = m.bias;
      params["mean"] = m.mean;
      params["scale"] = m.scale;
      break;
    case Variant::GaussianNb:
      params["prior"] = m.class_prior;
      params["mean"] = m.class_mean;
      params["var"] = m.class_var;
      break;
  }
  return Json{{"format", kFormat},
              {"version", kModelFormatVersion},
              {"variant", to_string(m.variant)},
              {"dims", m.dims},
              {"feature_names", m.feature_names},
              {"params", std::move(params)}};
}

Model model_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    malformed(std::string("unparseable JSON (") + e.what() + ")");
  }
  try {
    return parse_model(j);
  } catch (const Json::exception& e) {
    malformed(e.what());
  }
}

void save_model(const Model& m, const std::filesystem::path& destination) {
  io::write_file(destination, dump_json(to_json(m)) + "\n");
}

Model load_model(const std::filesystem::path& source) { return model_from_json(io::read_file(source)); }

}  // namespace kitscan::ml
