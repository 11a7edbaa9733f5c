#include "c2f/datagen/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "c2f/error.hpp"
#include "c2f/rng.hpp"

namespace c2f::data {

TrainValSplit split_and_subsample(const Dataset& ds, double val_fraction,
                                  std::optional<std::int64_t> per_class_train, std::uint64_t seed)
{
    if (!(val_fraction >= 0.0) || !(val_fraction < 1.0)) {
        throw ValidationError("validation fraction must lie in [0, 1)");
    }
    if (per_class_train && *per_class_train < 0) {
        throw ValidationError("per-class training count must be non-negative");
    }
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));

    // Walk the remaining samples in shuffled order so the kept subset is random.
    std::vector<std::size_t> train;
    std::vector<std::size_t> taken(ds.num_classes, 0);
    for (std::size_t i = n_val; i < n; ++i) {
        const std::size_t idx = order[i];
        const std::size_t y = ds.labels[idx];
        if (per_class_train && taken[y] >= static_cast<std::size_t>(*per_class_train)) {
            continue;
        }
        taken[y] += 1;
        train.push_back(idx);
    }
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return TrainValSplit{subset(ds, train), subset(ds, val)};
}

}  // namespace c2f::data
