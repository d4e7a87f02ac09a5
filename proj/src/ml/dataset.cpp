#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "kitscan/error.hpp"
#include "kitscan/ml.hpp"
#include "train_common.hpp"

namespace kitscan::ml {

std::size_t Dataset::positives() const noexcept {
  return static_cast<std::size_t>(std::count_if(y.begin(), y.end(), [](int v) { return v != 0; }));
}

void Dataset::validate() const {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(x.size()) + " rows but " + std::to_string(y.size()) + " targets");
  }
  if (!kit_ids.empty() && kit_ids.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "kit_ids length does not match row count");
  }
  const std::size_t d = x.empty() ? feature_names.size() : x.front().size();
  if (!feature_names.empty() && feature_names.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "feature_names length does not match row width");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d) throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(i) + " has wrong width");
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::InvalidArgument, "targets must be 0 or 1");
  }
  std::set<std::string_view> seen;
  for (const auto& id : kit_ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::InvalidArgument, "duplicated kit_id: " + id);
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.x.reserve(rows.size());
  out.y.reserve(rows.size());
  for (auto r : rows) {
    out.x.push_back(x.at(r));
    out.y.push_back(y.at(r));
    if (!kit_ids.empty()) out.kit_ids.push_back(kit_ids.at(r));
  }
  return out;
}

namespace detail {

void require_trainable(const Dataset& ds) {
  ds.validate();
  const std::size_t pos = ds.positives();
  if (ds.size() == 0 || pos == 0 || pos == ds.size()) {
    throw Error(ErrorCode::DegenerateDataset, "training data needs samples of both classes (" + std::to_string(pos) +
                                                  " positive of " + std::to_string(ds.size()) + ")");
  }
  if (ds.dims() == 0) throw Error(ErrorCode::DegenerateDataset, "training data has no features");
}

Model base_model(Variant v, const Dataset& ds) {
  Model m;
  m.variant = v;
  m.dims = ds.dims();
  m.feature_names = ds.feature_names;
  return m;
}

std::vector<std::size_t> canonical_order(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (!ds.kit_ids.empty() && ds.kit_ids[a] != ds.kit_ids[b]) return ds.kit_ids[a] < ds.kit_ids[b];
    if (ds.x[a] != ds.x[b]) return ds.x[a] < ds.x[b];
    if (ds.y[a] != ds.y[b]) return ds.y[a] < ds.y[b];
    return a < b;
  });
  return idx;
}

void check_dims(const Model& m, const std::vector<double>& x) {
  if (x.size() != m.dims) {
    throw Error(ErrorCode::DimensionMismatch,
                "model expects " + std::to_string(m.dims) + " features, got " + std::to_string(x.size()));
  }
}

}  // namespace detail

}  // namespace kitscan::ml
