#include <algorithm>
#include <cmath>
#include <numeric>

#include "kitscan/error.hpp"
#include "kitscan/ml.hpp"
#include "kitscan/support/parallel.hpp"
#include "kitscan/support/rng.hpp"
#include "train_common.hpp"

namespace kitscan::ml {

namespace {

__extension__ typedef __int128 Wide;

// Weighted Gini purity sum of a split, as the exact fraction num/den.
// Maximizing (pl^2+nl^2)/|L| + (pr^2+nr^2)/|R| minimizes weighted Gini.
struct SplitScore {
  Wide num = 0;
  Wide den = 1;
};

int compare(const SplitScore& a, const SplitScore& b) {
  const Wide l = a.num * b.den;
  const Wide r = b.num * a.den;
  return l < r ? -1 : (l > r ? 1 : 0);
}

struct Candidate {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  SplitScore score;
};

bool better(const Candidate& c, int feature, double threshold, const SplitScore& score) {
  if (!c.found) return true;
  const int cmp = compare(score, c.score);
  if (cmp != 0) return cmp > 0;
  if (feature != c.feature) return feature < c.feature;
  return threshold < c.threshold;
}

class Grower {
 public:
  Grower(const Dataset& ds, const TreeConfig& cfg, std::size_t k, Rng* rng, SplitTrace* trace)
      : ds_(ds), cfg_(cfg), k_(k), rng_(rng), trace_(trace) {}

  Tree grow(std::vector<std::size_t> rows) {
    Tree t;
    build(t, rows, 0);
    return t;
  }

 private:
  std::int32_t build(Tree& t, std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    std::uint32_t pos = 0;
    for (auto r : rows) pos += ds_.y[r] != 0 ? 1 : 0;
    t.nodes[id].positives = pos;
    t.nodes[id].negatives = static_cast<std::uint32_t>(rows.size()) - pos;

    const bool pure = pos == 0 || pos == rows.size();
    if (pure || rows.size() < std::max<std::size_t>(cfg_.min_samples_split, 2)) return id;
    if (cfg_.max_depth && depth >= *cfg_.max_depth) return id;

    const Candidate best = search(rows, pos);
    if (!best.found) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (ds_.x[r][best.feature] <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    t.nodes[id].feature = best.feature;
    t.nodes[id].threshold = best.threshold;
    const auto l = build(t, left, depth + 1);
    const auto r = build(t, right, depth + 1);
    t.nodes[id].left = l;
    t.nodes[id].right = r;
    return id;
  }

  Candidate search(const std::vector<std::size_t>& rows, std::uint32_t pos_total) {
    const std::size_t d = ds_.dims();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    Candidate best;
    SplitTrace::Split stats;
    stats.sampled = std::min(k_, d);
    // Partial Fisher-Yates: features are drawn uniformly without replacement,
    // only as far as the search needs.
    for (std::size_t i = 0; i < d; ++i) {
      if (rng_ != nullptr) {
        const std::size_t j = i + static_cast<std::size_t>(rng_->index(d - i));
        std::swap(order[i], order[j]);
      }
      if (i >= stats.sampled && best.found) break;
      ++stats.evaluated;
      evaluate(rows, pos_total, static_cast<int>(order[i]), best);
    }
    if (trace_ != nullptr) trace_->splits.push_back(stats);
    return best;
  }

  void evaluate(const std::vector<std::size_t>& rows, std::uint32_t pos_total, int f, Candidate& best) const {
    std::vector<std::pair<double, int>> v;
    v.reserve(rows.size());
    for (auto r : rows) v.emplace_back(ds_.x[r][f], ds_.y[r]);
    std::sort(v.begin(), v.end());
    const auto n = static_cast<std::int64_t>(v.size());
    const std::int64_t p_all = pos_total;
    std::int64_t pl = 0;
    for (std::int64_t i = 0; i + 1 < n; ++i) {
      pl += v[i].second != 0 ? 1 : 0;
      if (v[i].first == v[i + 1].first) continue;
      const std::int64_t nl_total = i + 1;
      const std::int64_t nr_total = n - nl_total;
      const std::int64_t ql = nl_total - pl;
      const std::int64_t pr = p_all - pl;
      const std::int64_t qr = nr_total - pr;
      SplitScore s;
      s.num = static_cast<Wide>(pl * pl + ql * ql) * nr_total + static_cast<Wide>(pr * pr + qr * qr) * nl_total;
      s.den = static_cast<Wide>(nl_total) * nr_total;
      const double threshold = v[i].first + (v[i + 1].first - v[i].first) / 2.0;
      if (better(best, f, threshold, s)) best = Candidate{true, f, threshold, s};
    }
  }

  const Dataset& ds_;
  const TreeConfig& cfg_;
  std::size_t k_;
  Rng* rng_;
  SplitTrace* trace_;
};

}  // namespace

const TreeNode& Tree::leaf_for(const std::vector<double>& x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                        : nodes[i].right);
  }
  return nodes[i];
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  // Children always follow their parent in `nodes`.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature < 0) continue;
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
  }
  return best;
}

std::size_t candidate_count(MaxFeatures policy, std::size_t d) noexcept {
  std::size_t k = d;
  switch (policy) {
    case MaxFeatures::All:
      break;
    case MaxFeatures::ThirdOfFeatures:
      k = (d + 2) / 3;
      break;
    case MaxFeatures::SqrtOfFeatures: {
      k = static_cast<std::size_t>(std::sqrt(static_cast<double>(d)));
      while (k * k > d) --k;
      while ((k + 1) * (k + 1) <= d) ++k;
      break;
    }
  }
  return std::max<std::size_t>(k, d == 0 ? 0 : 1);
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t tree_index) {
  Rng rng(seed + tree_index);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.index(n));
  return rows;
}

Model train_decision_tree(const Dataset& ds, const TrainConfig& cfg, SplitTrace* trace) {
  detail::require_trainable(ds);
  Model m = detail::base_model(Variant::Tree, ds);
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  Grower g(ds, cfg.tree, ds.dims(), nullptr, trace);
  m.trees.push_back(g.grow(std::move(rows)));
  return m;
}

Model train_random_forest(const Dataset& ds, const TrainConfig& cfg, SplitTrace* trace) {
  detail::require_trainable(ds);
  if (cfg.forest.n_trees == 0) throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  Model m = detail::base_model(Variant::Forest, ds);
  const std::size_t n_trees = cfg.forest.n_trees;
  const std::size_t k = candidate_count(cfg.forest.max_features, ds.dims());
  m.trees.resize(n_trees);
  std::vector<SplitTrace> traces(trace != nullptr ? n_trees : 0);
  parallel_for(n_trees, cfg.jobs, [&](std::size_t t) {
    // The bootstrap draw and the feature draws share one per-tree stream.
    Rng rng(cfg.seed + t);
    std::vector<std::size_t> rows(ds.size());
    if (cfg.forest.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.index(ds.size()));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    Grower g(ds, cfg.tree, k, &rng, trace != nullptr ? &traces[t] : nullptr);
    m.trees[t] = g.grow(std::move(rows));
  });
  if (trace != nullptr) {
    for (auto& t : traces) trace->splits.insert(trace->splits.end(), t.splits.begin(), t.splits.end());
  }
  return m;
}

}  // namespace kitscan::ml
