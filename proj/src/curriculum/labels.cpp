#include <algorithm>

#include "c2f/curriculum/coarse.hpp"
#include "c2f/error.hpp"

namespace c2f::cur {

std::vector<std::uint16_t> transform_labels(std::span<const std::uint16_t> labels,
                                            const hier::Partition& clusters)
{
    std::size_t max_class = 0;
    for (const auto& c : clusters) {
        for (std::size_t x : c) {
            max_class = std::max(max_class, x + 1);
        }
    }
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> map(max_class, kUnset);
    for (std::size_t idx = 0; idx < clusters.size(); ++idx) {
        for (std::size_t x : clusters[idx]) {
            if (map[x] != kUnset) {
                throw ValidationError("class " + std::to_string(x) + " appears in two clusters");
            }
            map[x] = idx;
        }
    }
    std::vector<std::uint16_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= map.size() || map[labels[i]] == kUnset) {
            throw ValidationError("label " + std::to_string(labels[i]) + " is not in any cluster");
        }
        out[i] = static_cast<std::uint16_t>(map[labels[i]]);
    }
    return out;
}

}  // namespace c2f::cur
