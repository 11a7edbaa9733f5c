#include <algorithm>
#include <cmath>

#include "c2f/curriculum/coarse.hpp"
#include "c2f/error.hpp"

namespace c2f::cur {

std::string to_string(TMode mode)
{
    switch (mode) {
    case TMode::AutoText: return "auto-text";
    case TMode::AutoAlg3: return "auto-alg3";
    case TMode::Fixed: return "fixed";
    }
    return "unknown";
}

TMode t_mode_from_string(const std::string& name)
{
    for (TMode m : {TMode::AutoText, TMode::AutoAlg3, TMode::Fixed}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ValidationError("unknown tMode '" + name + "'");
}

std::size_t curriculum_length(std::span<const double> val_acc, TMode mode,
                              std::optional<std::size_t> fixed_t)
{
    if (mode == TMode::Fixed) {
        if (!fixed_t) {
            throw ValidationError("fixed tMode needs an explicit T");
        }
        return *fixed_t;
    }
    if (val_acc.empty()) {
        throw ValidationError("curriculum length needs a nonempty validation curve");
    }
    const auto best = std::max_element(val_acc.begin(), val_acc.end());
    if (mode == TMode::AutoAlg3) {
        const auto best_epoch = static_cast<double>(best - val_acc.begin() + 1);
        return static_cast<std::size_t>(std::llround(0.9 * best_epoch));
    }
    const double threshold = 0.9 * *best;
    for (std::size_t e = 0; e < val_acc.size(); ++e) {
        if (val_acc[e] >= threshold) {
            return e + 1;
        }
    }
    return static_cast<std::size_t>(best - val_acc.begin() + 1);
}

std::vector<std::size_t> coarse_epoch_budget(std::size_t total, std::size_t coarse_levels)
{
    std::vector<std::size_t> out(coarse_levels, 0);
    if (coarse_levels == 0) {
        return out;
    }
    const auto per = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) / static_cast<double>(coarse_levels)));
    std::size_t remaining = total;
    for (std::size_t l = 0; l + 1 < coarse_levels; ++l) {
        out[l] = std::min(per, remaining);
        remaining -= out[l];
    }
    out.back() = remaining;
    return out;
}

}  // namespace c2f::cur
