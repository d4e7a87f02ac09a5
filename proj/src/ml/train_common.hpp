#pragma once

#include <vector>

#include "kitscan/ml.hpp"

namespace kitscan::ml::detail {

// Validates and throws DegenerateDataset unless both classes are present.
void require_trainable(const Dataset& ds);

Model base_model(Variant v, const Dataset& ds);

// Row indices sorted by (kit_id, features, target), so trainers that walk
// samples sequentially do not depend on the caller's row order.
std::vector<std::size_t> canonical_order(const Dataset& ds);

void check_dims(const Model& m, const std::vector<double>& x);

}  // namespace kitscan::ml::detail
