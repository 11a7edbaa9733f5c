#pragma once

#include <cstdint>
#include <optional>

#include "c2f/datagen/dataset.hpp"

namespace c2f::data {

struct TrainValSplit {
    Dataset train;
    Dataset val;
};

/// Holds out round(val_fraction * N) uniformly chosen samples for validation,
/// then keeps at most per_class_train samples of each class in the training
/// part (all of them when unset). Sample order follows the input.
TrainValSplit split_and_subsample(const Dataset& ds, double val_fraction,
                                  std::optional<std::int64_t> per_class_train,
                                  std::uint64_t seed);

}  // namespace c2f::data
