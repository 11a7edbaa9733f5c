#include "c2f/netcore/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "c2f/error.hpp"

namespace c2f::net {

namespace {

void check_labels(const Tensor& logits, std::span<const std::uint16_t> labels)
{
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
        throw ValidationError("loss: logits and labels disagree on sample count");
    }
    const std::size_t k = logits.dim(1);
    for (std::uint16_t y : labels) {
        if (y >= k) {
            throw ValidationError("loss: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(k) + ")");
        }
    }
}

// Log-sum-exp of float values accumulated in double.
double row_lse(std::span<const float> values)
{
    const double peak = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (float v : values) {
        sum += std::exp(v - peak);
    }
    return peak + std::log(sum);
}

}  // namespace

float log_sum_exp(std::span<const float> values)
{
    return static_cast<float>(row_lse(values));
}

std::vector<float> per_sample_cross_entropy(const Tensor& logits,
                                            std::span<const std::uint16_t> labels)
{
    check_labels(logits, labels);
    const std::size_t k = logits.dim(1);
    std::vector<float> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto row = logits.values().subspan(i * k, k);
        out[i] = static_cast<float>(row_lse(row) - row[labels[i]]);
    }
    return out;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::uint16_t> labels)
{
    check_labels(logits, labels);
    const std::size_t n = labels.size();
    const std::size_t k = logits.dim(1);
    LossResult result{0.0f, Tensor({n, k})};
    if (n == 0) {
        return result;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.values().subspan(i * k, k);
        float* grad = result.dlogits.data() + i * k;
        const double lse = row_lse(row);
        total += lse - row[labels[i]];
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - lse);
            grad[j] = static_cast<float>(((j == labels[i] ? p - 1.0 : p)) * inv_n);
        }
    }
    result.mean_loss = static_cast<float>(total * inv_n);
    return result;
}

}  // namespace c2f::net
