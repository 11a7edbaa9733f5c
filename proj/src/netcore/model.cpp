#include "c2f/netcore/model.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "c2f/error.hpp"
#include "c2f/netcore/kernels.hpp"
#include "c2f/rng.hpp"

namespace c2f::net {

namespace {

constexpr std::size_t kChunk = 16;        // samples per gradient partial sum
constexpr std::size_t kPredictSlice = 256;

int thread_count(const ExecContext& ctx)
{
    return ctx.threads > 0 ? ctx.threads : omp_get_max_threads();
}

void fill_uniform(Tensor& t, float bound, Rng& rng)
{
    for (float& v : t.values()) {
        v = static_cast<float>(bound * (2.0 * rng.uniform() - 1.0));
    }
}

// Forward pass of one sample through all encoder layers and the predictor.
template <bool Reference>
void forward_sample(const ModelSpec& spec, const std::vector<Shape3>& shapes,
                    const ModelParams& params, ForwardCache& cache, std::size_t n, float* logits)
{
    Shape3 in_shape = spec.input;
    for (std::size_t l = 0; l < spec.encoder.size(); ++l) {
        const LayerSpec& layer = spec.encoder[l];
        const Shape3 out_shape = shapes[l];
        const float* in = cache.activations[l].data() + n * in_shape.size();
        float* out = cache.activations[l + 1].data() + n * out_shape.size();
        const LayerParams& p = params.encoder[l];
        switch (layer.kind) {
        case LayerKind::Conv3x3:
            if constexpr (Reference) {
                ref::conv3x3_forward(in, in_shape, p.weight.data(), p.bias.data(), layer.units, out);
            } else {
                fast::conv3x3_forward(in, in_shape, p.weight.data(), p.bias.data(), layer.units, out);
            }
            break;
        case LayerKind::Dense:
            if constexpr (Reference) {
                ref::dense_forward(in, in_shape.size(), p.weight.data(), p.bias.data(), layer.units, out);
            } else {
                fast::dense_forward(in, in_shape.size(), p.weight.data(), p.bias.data(), layer.units, out);
            }
            break;
        case LayerKind::ReLU:
            ref::relu_forward(in, in_shape.size(), out);
            break;
        case LayerKind::MaxPool2x2:
            ref::maxpool2x2_forward(in, in_shape, out,
                                    cache.pool_argmax[l].data() + n * out_shape.size());
            break;
        case LayerKind::Flatten:
            std::copy(in, in + in_shape.size(), out);
            break;
        }
        in_shape = out_shape;
    }
    const float* embedding = cache.activations.back().data() + n * in_shape.size();
    const LayerParams& pred = params.predictor;
    if constexpr (Reference) {
        ref::dense_forward(embedding, in_shape.size(), pred.weight.data(), pred.bias.data(),
                           spec.num_classes, logits);
    } else {
        fast::dense_forward(embedding, in_shape.size(), pred.weight.data(), pred.bias.data(),
                            spec.num_classes, logits);
    }
}

struct Workspace {
    std::vector<float> grad_a;
    std::vector<float> grad_b;
    std::vector<float> scratch;
};

// Backward pass of one sample; accumulates parameter gradients into `grads`.
template <bool Reference>
void backward_sample(const ModelSpec& spec, const std::vector<Shape3>& shapes,
                     const ModelParams& params, const std::vector<std::vector<float>>& weights_t,
                     const ForwardCache& cache, std::size_t n, const float* dlogits,
                     Gradients& grads, Workspace& ws)
{
    const std::size_t layers = spec.encoder.size();
    const Shape3 emb_shape = shapes.back();
    const std::size_t emb = emb_shape.size();
    const float* embedding = cache.activations.back().data() + n * emb;
    float* cur = ws.grad_a.data();
    float* next = ws.grad_b.data();
    if constexpr (Reference) {
        ref::dense_backward(embedding, emb, params.predictor.weight.data(), spec.num_classes,
                            dlogits, grads.predictor.weight.data(), grads.predictor.bias.data(), cur);
    } else {
        fast::dense_backward(embedding, emb, params.predictor.weight.data(), spec.num_classes,
                             dlogits, grads.predictor.weight.data(), grads.predictor.bias.data(), cur);
    }
    for (std::size_t l = layers; l-- > 0;) {
        const LayerSpec& layer = spec.encoder[l];
        const Shape3 in_shape = l == 0 ? spec.input : shapes[l - 1];
        const Shape3 out_shape = shapes[l];
        const float* in = cache.activations[l].data() + n * in_shape.size();
        const float* out = cache.activations[l + 1].data() + n * out_shape.size();
        // The input gradient of the first layer is never needed.
        float* din = l == 0 ? nullptr : next;
        const LayerParams& p = params.encoder[l];
        LayerParams& g = grads.encoder[l];
        switch (layer.kind) {
        case LayerKind::Conv3x3:
            if constexpr (Reference) {
                ref::conv3x3_backward(in, in_shape, p.weight.data(), layer.units, cur,
                                      g.weight.data(), g.bias.data(), din);
            } else {
                fast::conv3x3_backward(in, in_shape, weights_t[l].data(), layer.units, cur,
                                       g.weight.data(), g.bias.data(), din, ws.scratch.data());
            }
            break;
        case LayerKind::Dense:
            if constexpr (Reference) {
                ref::dense_backward(in, in_shape.size(), p.weight.data(), layer.units, cur,
                                    g.weight.data(), g.bias.data(), din);
            } else {
                fast::dense_backward(in, in_shape.size(), p.weight.data(), layer.units, cur,
                                     g.weight.data(), g.bias.data(), din);
            }
            break;
        case LayerKind::ReLU:
            if (din != nullptr) {
                ref::relu_backward(out, out_shape.size(), cur, din);
            }
            break;
        case LayerKind::MaxPool2x2:
            if (din != nullptr) {
                ref::maxpool2x2_backward(in_shape, cur,
                                         cache.pool_argmax[l].data() + n * out_shape.size(), din);
            }
            break;
        case LayerKind::Flatten:
            if (din != nullptr) {
                std::copy(cur, cur + out_shape.size(), din);
            }
            break;
        }
        std::swap(cur, next);
    }
}

void add_into(Gradients& dst, const Gradients& src)
{
    auto d = parameter_tensors(dst);
    auto s = parameter_tensors(src);
    for (std::size_t t = 0; t < d.size(); ++t) {
        float* a = d[t]->data();
        const float* b = s[t]->data();
        for (std::size_t i = 0; i < d[t]->size(); ++i) {
            a[i] += b[i];
        }
    }
}

}  // namespace

std::string to_string(LayerKind kind)
{
    switch (kind) {
    case LayerKind::Conv3x3: return "conv3x3";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPool2x2: return "maxpool2x2";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    }
    return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name)
{
    for (LayerKind k : {LayerKind::Conv3x3, LayerKind::ReLU, LayerKind::MaxPool2x2,
                        LayerKind::Flatten, LayerKind::Dense}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ValidationError("unknown layer type '" + name + "'");
}

std::vector<Shape3> activation_shapes(const ModelSpec& spec)
{
    std::vector<Shape3> shapes;
    shapes.reserve(spec.encoder.size());
    Shape3 s = spec.input;
    for (std::size_t l = 0; l < spec.encoder.size(); ++l) {
        const LayerSpec& layer = spec.encoder[l];
        std::ostringstream where;
        where << "layer " << l << " (" << to_string(layer.kind) << ")";
        switch (layer.kind) {
        case LayerKind::Conv3x3:
            if (s.height < 3 || s.width < 3) {
                throw ValidationError(where.str() + ": input smaller than 3x3");
            }
            if (layer.units == 0) {
                throw ValidationError(where.str() + ": zero output channels");
            }
            s = Shape3{s.height - 2, s.width - 2, layer.units};
            break;
        case LayerKind::MaxPool2x2:
            if (s.height < 2 || s.width < 2) {
                throw ValidationError(where.str() + ": input smaller than 2x2");
            }
            s = Shape3{s.height / 2, s.width / 2, s.channels};
            break;
        case LayerKind::Dense:
            if (layer.units == 0) {
                throw ValidationError(where.str() + ": zero units");
            }
            s = Shape3{1, 1, layer.units};
            break;
        case LayerKind::Flatten:
            s = Shape3{1, 1, s.size()};
            break;
        case LayerKind::ReLU:
            break;
        }
        shapes.push_back(s);
    }
    return shapes;
}

void validate(const ModelSpec& spec)
{
    if (spec.encoder.empty()) {
        throw ValidationError("model needs at least one encoder layer");
    }
    if (spec.num_classes <= 1) {
        throw ValidationError("model needs at least two classes");
    }
    if (spec.input.size() == 0) {
        throw ValidationError("model input shape is empty");
    }
    if (activation_shapes(spec).back().size() == 0) {
        throw ValidationError("encoder output is empty");
    }
}

std::size_t embedding_dim(const ModelSpec& spec)
{
    return activation_shapes(spec).back().size();
}

LayerParams init_predictor(const ModelSpec& spec, std::uint64_t seed)
{
    const std::size_t e = embedding_dim(spec);
    Rng rng(seed);
    LayerParams p{Tensor({e, spec.num_classes}), Tensor({spec.num_classes})};
    fill_uniform(p.weight, static_cast<float>(std::sqrt(6.0 / static_cast<double>(e))), rng);
    return p;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed)
{
    validate(spec);
    const auto shapes = activation_shapes(spec);
    Rng rng(derive_seed(seed, 0));
    ModelParams params;
    Shape3 in = spec.input;
    for (std::size_t l = 0; l < spec.encoder.size(); ++l) {
        const LayerSpec& layer = spec.encoder[l];
        LayerParams p;
        if (layer.kind == LayerKind::Conv3x3) {
            const std::size_t fan_in = 9 * in.channels;
            p.weight = Tensor({9 * in.channels, layer.units});
            p.bias = Tensor({layer.units});
            fill_uniform(p.weight, static_cast<float>(std::sqrt(6.0 / static_cast<double>(fan_in))), rng);
        } else if (layer.kind == LayerKind::Dense) {
            const std::size_t fan_in = in.size();
            p.weight = Tensor({fan_in, layer.units});
            p.bias = Tensor({layer.units});
            fill_uniform(p.weight, static_cast<float>(std::sqrt(6.0 / static_cast<double>(fan_in))), rng);
        }
        params.encoder.push_back(std::move(p));
        in = shapes[l];
    }
    params.predictor = init_predictor(spec, derive_seed(seed, 1));
    return params;
}

ModelParams zeros_like(const ModelParams& params)
{
    ModelParams z = params;
    for (Tensor* t : parameter_tensors(z)) {
        t->fill(0.0f);
    }
    return z;
}

std::vector<Tensor*> parameter_tensors(ModelParams& params)
{
    std::vector<Tensor*> out;
    for (LayerParams& p : params.encoder) {
        if (!p.weight.empty()) {
            out.push_back(&p.weight);
            out.push_back(&p.bias);
        }
    }
    out.push_back(&params.predictor.weight);
    out.push_back(&params.predictor.bias);
    return out;
}

std::vector<const Tensor*> parameter_tensors(const ModelParams& params)
{
    std::vector<const Tensor*> out;
    for (const LayerParams& p : params.encoder) {
        if (!p.weight.empty()) {
            out.push_back(&p.weight);
            out.push_back(&p.bias);
        }
    }
    out.push_back(&params.predictor.weight);
    out.push_back(&params.predictor.bias);
    return out;
}

std::size_t parameter_count(const ModelParams& params)
{
    std::size_t n = 0;
    for (const Tensor* t : parameter_tensors(params)) {
        n += t->size();
    }
    return n;
}

void check_params(const ModelSpec& spec, const ModelParams& params)
{
    const auto shapes = activation_shapes(spec);
    if (params.encoder.size() != spec.encoder.size()) {
        throw ValidationError("parameter layer count does not match the model spec");
    }
    Shape3 in = spec.input;
    for (std::size_t l = 0; l < spec.encoder.size(); ++l) {
        const LayerSpec& layer = spec.encoder[l];
        const LayerParams& p = params.encoder[l];
        std::vector<std::size_t> w;
        std::vector<std::size_t> b;
        if (layer.kind == LayerKind::Conv3x3) {
            w = {9 * in.channels, layer.units};
            b = {layer.units};
        } else if (layer.kind == LayerKind::Dense) {
            w = {in.size(), layer.units};
            b = {layer.units};
        }
        if (w.empty() ? !p.weight.empty() : (p.weight.shape() != w || p.bias.shape() != b)) {
            throw ValidationError("parameter shapes of layer " + std::to_string(l) +
                                  " do not match the model spec");
        }
        in = shapes[l];
    }
    const std::vector<std::size_t> pw{in.size(), spec.num_classes};
    const std::vector<std::size_t> pb{spec.num_classes};
    if (params.predictor.weight.shape() != pw || params.predictor.bias.shape() != pb) {
        throw ValidationError("predictor shape does not match the model spec");
    }
}

ForwardResult forward(const ModelSpec& spec, const ModelParams& params, const Tensor& batch,
                      const ExecContext& ctx)
{
    validate(spec);
    if (batch.rank() == 0) {
        throw ValidationError("forward: batch tensor has no shape");
    }
    const std::size_t n = batch.dim(0);
    if (batch.size() != n * spec.input.size()) {
        throw ValidationError("forward: batch shape does not match the model input");
    }
    const auto shapes = activation_shapes(spec);

    ForwardResult result;
    ForwardCache& cache = result.cache;
    cache.spec = spec;
    cache.batch = n;
    cache.activations.resize(spec.encoder.size() + 1);
    cache.pool_argmax.resize(spec.encoder.size());
    cache.activations[0].assign(batch.values().begin(), batch.values().end());
    for (std::size_t l = 0; l < spec.encoder.size(); ++l) {
        cache.activations[l + 1].resize(n * shapes[l].size());
        if (spec.encoder[l].kind == LayerKind::MaxPool2x2) {
            cache.pool_argmax[l].resize(n * shapes[l].size());
        }
    }
    result.logits = Tensor({n, spec.num_classes});
    float* logits = result.logits.data();
    const std::size_t k = spec.num_classes;

    if (ctx.backend == Backend::Reference) {
        for (std::size_t i = 0; i < n; ++i) {
            forward_sample<true>(spec, shapes, params, cache, i, logits + i * k);
        }
    } else {
        const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count(ctx))
        for (long long i = 0; i < count; ++i) {
            const auto s = static_cast<std::size_t>(i);
            forward_sample<false>(spec, shapes, params, cache, s, logits + s * k);
        }
    }
    return result;
}

Tensor predict(const ModelSpec& spec, const ModelParams& params, const Tensor& inputs,
               const ExecContext& ctx)
{
    const std::size_t n = inputs.rank() == 0 ? 0 : inputs.dim(0);
    Tensor logits({n, spec.num_classes});
    for (std::size_t first = 0; first < n; first += kPredictSlice) {
        const std::size_t count = std::min(kPredictSlice, n - first);
        const ForwardResult r = forward(spec, params, slice_batch(inputs, first, count), ctx);
        std::copy(r.logits.values().begin(), r.logits.values().end(),
                  logits.data() + first * spec.num_classes);
    }
    return logits;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, const Tensor& dlogits,
                   const ExecContext& ctx)
{
    const ModelSpec& spec = cache.spec;
    const std::size_t n = cache.batch;
    if (dlogits.rank() != 2 || dlogits.dim(0) != n || dlogits.dim(1) != spec.num_classes) {
        throw ValidationError("backward: dlogits shape does not match the cached forward pass");
    }
    check_params(spec, params);
    const auto shapes = activation_shapes(spec);
    std::size_t widest = spec.input.size();
    std::size_t widest_patch = 0;
    std::vector<std::vector<float>> weights_t(spec.encoder.size());
    Shape3 in = spec.input;
    for (std::size_t l = 0; l < spec.encoder.size(); ++l) {
        widest = std::max(widest, shapes[l].size());
        if (spec.encoder[l].kind == LayerKind::Conv3x3) {
            widest_patch = std::max(widest_patch, 9 * in.channels);
            if (ctx.backend == Backend::Parallel) {
                weights_t[l].resize(params.encoder[l].weight.size());
                fast::transpose_conv_weight(params.encoder[l].weight.data(), in.channels,
                                            spec.encoder[l].units, weights_t[l].data());
            }
        }
        in = shapes[l];
    }
    auto make_workspace = [&] {
        return Workspace{std::vector<float>(widest), std::vector<float>(widest),
                         std::vector<float>(widest_patch)};
    };
    const std::size_t k = spec.num_classes;
    Gradients total = zeros_like(params);

    if (ctx.backend == Backend::Reference) {
        Workspace ws = make_workspace();
        for (std::size_t i = 0; i < n; ++i) {
            backward_sample<true>(spec, shapes, params, weights_t, cache, i,
                                  dlogits.data() + i * k, total, ws);
        }
        return total;
    }

    const int threads = thread_count(ctx);
    std::size_t chunk = kChunk;
    if (!ctx.deterministic) {
        chunk = std::max<std::size_t>(1, (n + static_cast<std::size_t>(threads) - 1) /
                                             static_cast<std::size_t>(threads));
    }
    const std::size_t chunks = (n + chunk - 1) / chunk;
    std::vector<Gradients> partial(chunks);
    const long long chunk_count = static_cast<long long>(chunks);
#pragma omp parallel num_threads(threads)
    {
        Workspace ws = make_workspace();
#pragma omp for schedule(static)
        for (long long c = 0; c < chunk_count; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            partial[ci] = zeros_like(params);
            const std::size_t end = std::min(n, (ci + 1) * chunk);
            for (std::size_t i = ci * chunk; i < end; ++i) {
                backward_sample<false>(spec, shapes, params, weights_t, cache, i,
                                       dlogits.data() + i * k, partial[ci], ws);
            }
        }
    }
    for (const Gradients& g : partial) {
        add_into(total, g);
    }
    return total;
}

std::size_t argmax(std::span<const float> row)
{
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[best]) {
            best = j;
        }
    }
    return best;
}

std::vector<std::size_t> argmax_rows(const Tensor& logits)
{
    const std::size_t n = logits.dim(0);
    const std::size_t k = logits.dim(1);
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = argmax(logits.values().subspan(i * k, k));
    }
    return out;
}

double accuracy(const Tensor& logits, std::span<const std::uint16_t> labels)
{
    if (labels.empty()) {
        throw ValidationError("accuracy of an empty dataset is undefined");
    }
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
        throw ValidationError("accuracy: logits and labels disagree on sample count");
    }
    const auto predicted = argmax_rows(logits);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        correct += predicted[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate(const ModelSpec& spec, const ModelParams& params, const Tensor& inputs,
                std::span<const std::uint16_t> labels, const ExecContext& ctx)
{
    if (labels.empty()) {
        throw ValidationError("cannot evaluate on an empty dataset");
    }
    return accuracy(predict(spec, params, inputs, ctx), labels);
}

Tensor slice_batch(const Tensor& batch, std::size_t first, std::size_t count)
{
    std::vector<std::size_t> shape = batch.shape();
    const std::size_t per = shape_size(shape) / std::max<std::size_t>(shape[0], 1);
    shape[0] = count;
    std::vector<float> data(batch.data() + first * per, batch.data() + (first + count) * per);
    return Tensor(std::move(shape), std::move(data));
}

Tensor gather_batch(const Tensor& batch, std::span<const std::size_t> rows)
{
    std::vector<std::size_t> shape = batch.shape();
    const std::size_t per = shape_size(shape) / std::max<std::size_t>(shape[0], 1);
    shape[0] = rows.size();
    Tensor out(std::move(shape));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::memcpy(out.data() + i * per, batch.data() + rows[i] * per, per * sizeof(float));
    }
    return out;
}

}  // namespace c2f::net
