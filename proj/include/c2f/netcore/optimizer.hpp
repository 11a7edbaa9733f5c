#pragma once

#include <cstdint>
#include <vector>

#include "c2f/netcore/model.hpp"

namespace c2f::net {

enum class OptimizerKind { Adam, SgdMomentum };

struct OptimizerHyper {
    OptimizerKind kind = OptimizerKind::Adam;
    float learning_rate = 0.001f;
    float momentum = 0.9f;  // SGD only
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-7f;
    float weight_decay = 0.0f;  // L2 term added to the gradient
};

struct OptimizerState {
    OptimizerHyper hyper;
    // First moment (Adam) or velocity (SGD), then second moment (Adam only);
    // each mirrors the parameter tensors in parameter_tensors() order.
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step_count = 0;
};

OptimizerState make_optimizer(const OptimizerHyper& hyper, const ModelParams& params);

// In-place update; step_count += 1. Throws ValidationError on shape mismatch.
void optimizer_step(OptimizerState& state, ModelParams& params, const Gradients& grads);

}  // namespace c2f::net
