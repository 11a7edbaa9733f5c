#include <algorithm>
#include <cmath>

#include "c2f/curriculum/coarse.hpp"
#include "c2f/error.hpp"

namespace c2f::cur {

net::LossResult marginalized_loss(const Tensor& logits, std::span<const std::uint16_t> labels,
                                  std::span<const std::size_t> cluster_map)
{
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
        throw ValidationError("marginalized loss: logits must be N x K with one label per row");
    }
    const std::size_t n = logits.dim(0);
    const std::size_t k = logits.dim(1);
    if (cluster_map.size() != k) {
        throw ValidationError("marginalized loss: cluster map does not cover every class");
    }
    net::LossResult out{0.0f, Tensor({n, k})};
    if (n == 0) {
        return out;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= k) {
            throw ValidationError("marginalized loss: label " + std::to_string(labels[i]) + " out of range");
        }
        const float* row = logits.data() + i * k;
        const std::size_t target = cluster_map[labels[i]];
        bool whole = true;
        double max_all = row[0];
        double max_in = -INFINITY;
        for (std::size_t j = 0; j < k; ++j) {
            max_all = std::max<double>(max_all, row[j]);
            if (cluster_map[j] == target) {
                max_in = std::max<double>(max_in, row[j]);
            } else {
                whole = false;
            }
        }
        // The only cluster has probability exactly one.
        if (whole) {
            continue;
        }
        double sum_all = 0.0;
        double sum_in = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            sum_all += std::exp(row[j] - max_all);
            if (cluster_map[j] == target) {
                sum_in += std::exp(row[j] - max_in);
            }
        }
        const double lse_all = max_all + std::log(sum_all);
        const double lse_in = max_in + std::log(sum_in);
        total += lse_all - lse_in;
        float* g = out.dlogits.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            const double all = std::exp(row[j] - lse_all);
            const double within = cluster_map[j] == target ? std::exp(row[j] - lse_in) : 0.0;
            g[j] = static_cast<float>((all - within) * inv_n);
        }
    }
    out.mean_loss = static_cast<float>(total / static_cast<double>(n));
    return out;
}

std::vector<std::size_t> predict_clusters(const Tensor& logits, std::span<const std::size_t> cluster_map,
                                          std::size_t num_clusters)
{
    const std::size_t n = logits.dim(0);
    const std::size_t k = logits.dim(1);
    if (cluster_map.size() != k) {
        throw ValidationError("cluster map does not cover every class");
    }
    std::vector<std::size_t> out(n);
    std::vector<double> mass(num_clusters);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = logits.data() + i * k;
        const float mx = *std::max_element(row, row + k);
        std::fill(mass.begin(), mass.end(), 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            mass[cluster_map[j]] += std::exp(static_cast<double>(row[j] - mx));
        }
        out[i] = static_cast<std::size_t>(std::max_element(mass.begin(), mass.end()) - mass.begin());
    }
    return out;
}

}  // namespace c2f::cur
