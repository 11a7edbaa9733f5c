#include "c2f/netcore/optimizer.hpp"

#include <cmath>

#include "c2f/error.hpp"

namespace c2f::net {

OptimizerState make_optimizer(const OptimizerHyper& hyper, const ModelParams& params)
{
    OptimizerState state;
    state.hyper = hyper;
    for (const Tensor* t : parameter_tensors(params)) {
        state.first_moment.emplace_back(t->shape());
        if (hyper.kind == OptimizerKind::Adam) {
            state.second_moment.emplace_back(t->shape());
        }
    }
    return state;
}

void optimizer_step(OptimizerState& state, ModelParams& params, const Gradients& grads)
{
    auto p = parameter_tensors(params);
    auto g = parameter_tensors(grads);
    if (p.size() != g.size() || p.size() != state.first_moment.size()) {
        throw ValidationError("optimizer: parameter, gradient and state layouts differ");
    }
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (!p[t]->same_shape(*g[t]) || !p[t]->same_shape(state.first_moment[t])) {
            throw ValidationError("optimizer: tensor shape mismatch");
        }
    }

    const OptimizerHyper& h = state.hyper;
    state.step_count += 1;
    const double step = static_cast<double>(state.step_count);

    if (h.kind == OptimizerKind::SgdMomentum) {
        for (std::size_t t = 0; t < p.size(); ++t) {
            float* w = p[t]->data();
            const float* dw = g[t]->data();
            float* v = state.first_moment[t].data();
            for (std::size_t i = 0; i < p[t]->size(); ++i) {
                const float grad = dw[i] + h.weight_decay * w[i];
                v[i] = h.momentum * v[i] + grad;
                w[i] -= h.learning_rate * v[i];
            }
        }
        return;
    }

    const float correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(h.beta1), step));
    const float correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(h.beta2), step));
    for (std::size_t t = 0; t < p.size(); ++t) {
        float* w = p[t]->data();
        const float* dw = g[t]->data();
        float* m = state.first_moment[t].data();
        float* v = state.second_moment[t].data();
        for (std::size_t i = 0; i < p[t]->size(); ++i) {
            const float grad = dw[i] + h.weight_decay * w[i];
            m[i] = h.beta1 * m[i] + (1.0f - h.beta1) * grad;
            v[i] = h.beta2 * v[i] + (1.0f - h.beta2) * grad * grad;
            const float m_hat = m[i] / correction1;
            const float v_hat = v[i] / correction2;
            w[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
        }
    }
}

}  // namespace c2f::net
