#include <cmath>

#include "kitscan/error.hpp"
#include "kitscan/ml.hpp"
#include "kitscan/support/rng.hpp"
#include "train_common.hpp"

namespace kitscan::ml {

// Pegasos-style stochastic subgradient descent on the L2-regularized hinge
// loss, lambda = 1/(C n), with a decaying step eta0 / (1 + eta0 lambda t).
Model train_linear_svm(const Dataset& ds, const TrainConfig& cfg) {
  detail::require_trainable(ds);
  if (cfg.svm.epochs == 0) throw Error(ErrorCode::InvalidArgument, "svm epochs must be >= 1");
  if (!(cfg.svm.c > 0.0)) throw Error(ErrorCode::InvalidArgument, "svm C must be positive");

  Model m = detail::base_model(Variant::LinearSvm, ds);
  const std::size_t n = ds.size();
  const std::size_t d = ds.dims();
  auto order = detail::canonical_order(ds);

  m.mean.assign(d, 0.0);
  m.scale.assign(d, 1.0);
  for (std::size_t f = 0; f < d; ++f) {
    double sum = 0.0;
    for (auto r : order) sum += ds.x[r][f];
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (auto r : order) ss += (ds.x[r][f] - mu) * (ds.x[r][f] - mu);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.mean[f] = mu;
    if (sd > 0.0) m.scale[f] = sd;
  }

  std::vector<std::vector<double>> z(n, std::vector<double>(d));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < d; ++f) z[r][f] = (ds.x[r][f] - m.mean[f]) / m.scale[f];
  }

  const double lambda = 1.0 / (cfg.svm.c * static_cast<double>(n));
  m.weights.assign(d, 0.0);
  m.bias = 0.0;
  Rng rng(cfg.seed);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < cfg.svm.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (auto r : order) {
      const double eta = cfg.svm.eta0 / (1.0 + cfg.svm.eta0 * lambda * static_cast<double>(t));
      ++t;
      const double label = ds.y[r] != 0 ? 1.0 : -1.0;
      double margin = m.bias;
      for (std::size_t f = 0; f < d; ++f) margin += m.weights[f] * z[r][f];
      const double shrink = 1.0 - eta * lambda;
      for (auto& w : m.weights) w *= shrink;
      if (label * margin < 1.0) {
        for (std::size_t f = 0; f < d; ++f) m.weights[f] += eta * label * z[r][f];
        m.bias += eta * label;
      }
    }
  }
  return m;
}

}  // namespace kitscan::ml
