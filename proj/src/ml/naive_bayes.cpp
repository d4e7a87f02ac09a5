#include <algorithm>
#include <cmath>

#include "kitscan/error.hpp"
#include "kitscan/ml.hpp"
#include "train_common.hpp"

namespace kitscan::ml {

Model train_gaussian_nb(const Dataset& ds, const TrainConfig& cfg) {
  detail::require_trainable(ds);
  Model m = detail::base_model(Variant::GaussianNb, ds);
  const std::size_t n = ds.size();
  const std::size_t d = ds.dims();
  // Sums run in canonical order so the result does not depend on row order.
  const auto order = detail::canonical_order(ds);

  double max_var = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    double sum = 0.0;
    for (auto r : order) sum += ds.x[r][f];
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (auto r : order) ss += (ds.x[r][f] - mu) * (ds.x[r][f] - mu);
    max_var = std::max(max_var, ss / static_cast<double>(n));
  }
  const double epsilon = std::max(cfg.nb.var_smoothing * max_var, 1e-12);

  m.class_prior.assign(2, 0.0);
  m.class_mean.assign(2, std::vector<double>(d, 0.0));
  m.class_var.assign(2, std::vector<double>(d, 0.0));
  for (int c = 0; c < 2; ++c) {
    std::size_t count = 0;
    for (auto r : order) count += ds.y[r] == c ? 1 : 0;
    m.class_prior[c] = static_cast<double>(count) / static_cast<double>(n);
    for (std::size_t f = 0; f < d; ++f) {
      double sum = 0.0;
      for (auto r : order) {
        if (ds.y[r] == c) sum += ds.x[r][f];
      }
      const double mu = sum / static_cast<double>(count);
      double ss = 0.0;
      for (auto r : order) {
        if (ds.y[r] == c) ss += (ds.x[r][f] - mu) * (ds.x[r][f] - mu);
      }
      m.class_mean[c][f] = mu;
      m.class_var[c][f] = ss / static_cast<double>(count) + epsilon;
    }
  }
  return m;
}

}  // namespace kitscan::ml
