#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "c2f/tensor.hpp"

namespace c2f::net {

struct LossResult {
    float mean_loss = 0.0f;
    Tensor dlogits;  // gradient of the mean loss, N x K
};

// Mean softmax cross-entropy via max-shifted log-sum-exp; dlogits = (softmax - onehot) / N.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::uint16_t> labels);

// Unreduced per-sample cross-entropy.
std::vector<float> per_sample_cross_entropy(const Tensor& logits,
                                            std::span<const std::uint16_t> labels);

// Numerically stable log(sum(exp(values))).
float log_sum_exp(std::span<const float> values);

}  // namespace c2f::net
