#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "c2f/tensor.hpp"

namespace c2f::net {

enum class LayerKind { Conv3x3, ReLU, MaxPool2x2, Flatten, Dense };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    // Output channels for Conv3x3, output units for Dense, unused otherwise.
    std::size_t units = 0;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Height x width x channels of one sample. Feature vectors use {1, 1, dim}.
struct Shape3 {
    std::size_t height = 1;
    std::size_t width = 1;
    std::size_t channels = 1;

    std::size_t size() const noexcept { return height * width * channels; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Encoder layers followed by an implicit dense predictor onto num_classes
/// logits. Convolutions are 3x3, stride 1, no padding; pooling is 2x2 stride 2.
struct ModelSpec {
    Shape3 input;
    std::vector<LayerSpec> encoder;
    std::size_t num_classes = 0;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Throws ValidationError when the spec cannot describe a classifier.
void validate(const ModelSpec& spec);
// Per-sample shape after each encoder layer (same length as spec.encoder).
std::vector<Shape3> activation_shapes(const ModelSpec& spec);
// Width E of the embedding fed to the predictor.
std::size_t embedding_dim(const ModelSpec& spec);

struct LayerParams {
    Tensor weight;
    Tensor bias;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Encoder parameters (one entry per encoder layer, empty for parameter-free
/// layers) and the predictor. Conv weights are laid out [ky][kx][cin][cout],
/// dense weights [in][out]; the predictor weight is E x K so column k is the
/// embedding of class k.
struct ModelParams {
    std::vector<LayerParams> encoder;
    LayerParams predictor;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using Gradients = ModelParams;

// Weights ~ U(-a, a) with a = sqrt(6 / fan_in); biases zero.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);
// Fresh predictor for a spec (used when the number of outputs changes).
LayerParams init_predictor(const ModelSpec& spec, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);
void check_params(const ModelSpec& spec, const ModelParams& params);

// Flat views over all tensors in a fixed order (encoder layers, then predictor).
std::vector<Tensor*> parameter_tensors(ModelParams& params);
std::vector<const Tensor*> parameter_tensors(const ModelParams& params);

enum class Backend { Parallel, Reference };

struct ExecContext {
    Backend backend = Backend::Parallel;
    // Gradient reductions are always summed in fixed chunk order; with this
    // flag unset the chunk size follows the thread count instead.
    bool deterministic = true;
    int threads = 0;  // 0: OpenMP default
};

/// Activations kept by forward() for backward().
struct ForwardCache {
    ModelSpec spec;
    std::size_t batch = 0;
    // activations[0] is the input, activations[l + 1] the output of encoder layer l.
    std::vector<std::vector<float>> activations;
    // Per encoder layer; only filled for max-pool layers (flat input offset of the max).
    std::vector<std::vector<std::uint32_t>> pool_argmax;
};

struct ForwardResult {
    Tensor logits;  // N x K
    ForwardCache cache;
};

// batch: N x H x W x C (or N x dim). Throws ValidationError on shape mismatch.
ForwardResult forward(const ModelSpec& spec, const ModelParams& params, const Tensor& batch,
                      const ExecContext& ctx = {});
// Logits only, evaluated in slices so large datasets need little memory.
Tensor predict(const ModelSpec& spec, const ModelParams& params, const Tensor& inputs,
               const ExecContext& ctx = {});
// Gradients of sum_n <dlogits_n, logits_n> with respect to every parameter.
Gradients backward(const ModelParams& params, const ForwardCache& cache, const Tensor& dlogits,
                   const ExecContext& ctx = {});

// Index of the largest value, lowest index on ties.
std::size_t argmax(std::span<const float> row);
std::vector<std::size_t> argmax_rows(const Tensor& logits);

// Fraction of samples whose argmax logit equals the label. Throws on empty input.
double accuracy(const Tensor& logits, std::span<const std::uint16_t> labels);
double evaluate(const ModelSpec& spec, const ModelParams& params, const Tensor& inputs,
                std::span<const std::uint16_t> labels, const ExecContext& ctx = {});

// Copies samples [first, first + count) of a batch tensor.
Tensor slice_batch(const Tensor& batch, std::size_t first, std::size_t count);
Tensor gather_batch(const Tensor& batch, std::span<const std::size_t> rows);

}  // namespace c2f::net
