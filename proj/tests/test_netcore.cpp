#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "c2f/error.hpp"
#include "c2f/netcore/checkpoint.hpp"
#include "c2f/netcore/kernels.hpp"
#include "c2f/netcore/loss.hpp"
#include "c2f/netcore/model.hpp"
#include "c2f/netcore/optimizer.hpp"
#include "support/oracles.hpp"

using namespace c2f;
using net::LayerKind;

namespace {

net::ExecContext reference()
{
    return net::ExecContext{net::Backend::Reference};
}

std::vector<std::uint16_t> random_labels(std::size_t n, std::size_t k, Rng& rng)
{
    std::vector<std::uint16_t> y(n);
    for (auto& v : y) {
        v = static_cast<std::uint16_t>(rng.below(k));
    }
    return y;
}

}  // namespace

TEST_CASE("tensor shape and data must agree")
{
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<float>(5)), ValidationError);
    Tensor t({2, 3}, 1.5f);
    CHECK(t.size() == 6);
    CHECK(t.at(1, 2) == 1.5f);
    t[0] = NAN;
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("init_params is deterministic and shaped by the spec")
{
    const net::ModelSpec spec{{1, 1, 2}, {{LayerKind::Dense, 4}}, 3};
    const auto a = net::init_params(spec, 7);
    const auto b = net::init_params(spec, 7);
    CHECK(a == b);
    CHECK(a.predictor.weight.shape() == std::vector<std::size_t>{4, 3});
    CHECK(a.predictor.bias.shape() == std::vector<std::size_t>{3});
    CHECK(a.encoder[0].weight.shape() == std::vector<std::size_t>{2, 4});
    CHECK_FALSE(a == net::init_params(spec, 8));
    for (float v : a.predictor.bias.values()) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("dense init weights have the mean of U(-a, a)")
{
    const net::ModelSpec spec{{1, 1, 100}, {{LayerKind::Dense, 100}}, 2};
    const auto p = net::init_params(spec, 3);
    const auto w = p.encoder[0].weight.values();
    REQUIRE(w.size() == 10000);
    double sum = 0.0;
    const double a = std::sqrt(6.0 / 100.0);
    for (float v : w) {
        CHECK(std::abs(v) <= a);
        sum += v;
    }
    const double mean = sum / 10000.0;
    const double sigma_of_mean = a / std::sqrt(3.0) / 100.0;
    CHECK(std::abs(mean) <= 3.0 * sigma_of_mean);
}

TEST_CASE("invalid specs are rejected")
{
    CHECK_THROWS_AS(net::validate(net::ModelSpec{{1, 1, 2}, {}, 3}), ValidationError);
    CHECK_THROWS_AS(net::validate(net::ModelSpec{{1, 1, 2}, {{LayerKind::Dense, 4}}, 1}), ValidationError);
    CHECK_THROWS_AS(net::validate(net::ModelSpec{{2, 2, 1}, {{LayerKind::Conv3x3, 4}}, 3}), ValidationError);
}

TEST_CASE("forward of an all-zero model gives zero logits")
{
    const auto spec = oracle::small_cnn(10, 3, 4);
    auto p = net::zeros_like(net::init_params(spec, 1));
    Rng rng(1);
    const Tensor x = oracle::random_tensor({3, 10, 10, 2}, rng);
    const auto fr = net::forward(spec, p, x);
    for (float v : fr.logits.values()) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("identity dense net returns its input")
{
    const net::ModelSpec spec{{1, 1, 3}, {{LayerKind::Dense, 3}}, 3};
    auto p = net::zeros_like(net::init_params(spec, 1));
    for (std::size_t i = 0; i < 3; ++i) {
        p.encoder[0].weight.at(i, i) = 1.0f;
        p.predictor.weight.at(i, i) = 1.0f;
    }
    const Tensor x({1, 3}, std::vector<float>{0.5f, -2.0f, 3.25f});
    const auto fr = net::forward(spec, p, x);
    CHECK(fr.logits.values()[0] == 0.5f);
    CHECK(fr.logits.values()[1] == -2.0f);
    CHECK(fr.logits.values()[2] == 3.25f);
}

TEST_CASE("forward matches the straight-line reference")
{
    Rng rng(11);
    for (const auto& spec : {oracle::small_mlp(5, 7, 4), oracle::small_cnn(12, 4, 5)}) {
        const auto p = net::init_params(spec, 3);
        std::vector<std::size_t> shape{6, spec.input.height, spec.input.width, spec.input.channels};
        if (spec.input.height == 1) {
            shape = {6, spec.input.channels};
        }
        const Tensor x = oracle::random_tensor(shape, rng);
        const auto expect = oracle::shadow_forward(oracle::shadow(spec, p), x);
        for (auto ctx : {net::ExecContext{}, reference()}) {
            const auto fr = net::forward(spec, p, x, ctx);
            for (std::size_t i = 0; i < expect.size(); ++i) {
                CHECK(std::abs(fr.logits[i] - expect[i]) <= 1e-5);
            }
        }
    }
}

TEST_CASE("forward rejects a batch of the wrong shape")
{
    const auto spec = oracle::small_mlp(5, 7, 4);
    const auto p = net::init_params(spec, 3);
    CHECK_THROWS_AS(net::forward(spec, p, Tensor({2, 6})), ValidationError);
}

TEST_CASE("backward is linear in dlogits")
{
    const auto spec = oracle::small_cnn(10, 3, 4);
    const auto p = net::init_params(spec, 5);
    Rng rng(5);
    const Tensor x = oracle::random_tensor({4, 10, 10, 2}, rng);
    const auto fr = net::forward(spec, p, x);
    const auto zero = net::backward(p, fr.cache, Tensor({4, 4}));
    for (const Tensor* t : net::parameter_tensors(zero)) {
        for (float v : t->values()) {
            CHECK(v == 0.0f);
        }
    }
    Tensor d = oracle::random_tensor({4, 4}, rng);
    const auto g1 = net::backward(p, fr.cache, d);
    for (float& v : d.values()) {
        v *= 2.0f;
    }
    const auto g2 = net::backward(p, fr.cache, d);
    const auto t1 = net::parameter_tensors(g1);
    const auto t2 = net::parameter_tensors(g2);
    for (std::size_t k = 0; k < t1.size(); ++k) {
        for (std::size_t i = 0; i < t1[k]->size(); ++i) {
            CHECK((*t2[k])[i] == 2.0f * (*t1[k])[i]);
        }
    }
    CHECK_THROWS_AS(net::backward(p, fr.cache, Tensor({3, 4})), ValidationError);
}

TEST_CASE("backward matches central finite differences")
{
    Rng rng(21);
    for (const auto& spec : {oracle::small_mlp(6, 8, 4), oracle::small_cnn(10, 3, 4)}) {
        for (int trial = 0; trial < 3; ++trial) {
            const auto p = net::init_params(spec, 100 + trial);
            std::vector<std::size_t> shape{3, spec.input.height, spec.input.width, spec.input.channels};
            if (spec.input.height == 1) {
                shape = {3, spec.input.channels};
            }
            const Tensor x = oracle::random_tensor(shape, rng);
            const Tensor w = oracle::random_tensor({3, 4}, rng);
            for (auto ctx : {net::ExecContext{}, reference()}) {
                const auto fr = net::forward(spec, p, x, ctx);
                const auto g = net::backward(p, fr.cache, w, ctx);
                Rng pick(trial);
                const auto rep = oracle::finite_difference_check(spec, p, x, w, g, 1e-3, 40, pick);
                CHECK(rep.checked > 0);
                CHECK(rep.skipped * 10 <= rep.checked + rep.skipped);
                CHECK(rep.worst <= 1e-3);
            }
        }
    }
}

TEST_CASE("parallel and reference backends agree")
{
    Rng rng(31);
    const auto spec = oracle::small_cnn(14, 8, 6);
    const auto p = net::init_params(spec, 9);
    const Tensor x = oracle::random_tensor({37, 14, 14, 2}, rng);
    const Tensor d = oracle::random_tensor({37, 6}, rng);
    const auto fa = net::forward(spec, p, x);
    const auto fb = net::forward(spec, p, x, reference());
    for (std::size_t i = 0; i < fa.logits.size(); ++i) {
        CHECK(fa.logits[i] == doctest::Approx(fb.logits[i]).epsilon(1e-5));
    }
    const auto ga = net::parameter_tensors(net::backward(p, fa.cache, d));
    const auto gb_params = net::backward(p, fb.cache, d, reference());
    const auto gb = net::parameter_tensors(gb_params);
    for (std::size_t k = 0; k < ga.size(); ++k) {
        for (std::size_t i = 0; i < ga[k]->size(); ++i) {
            CHECK(std::abs((*ga[k])[i] - (*gb[k])[i]) <= 1e-4f * (1.0f + std::abs((*gb[k])[i])));
        }
    }
}

TEST_CASE("deterministic gradients do not depend on the thread count")
{
    Rng rng(41);
    const auto spec = oracle::small_cnn(10, 8, 4);
    const auto p = net::init_params(spec, 2);
    const Tensor x = oracle::random_tensor({70, 10, 10, 2}, rng);
    const Tensor d = oracle::random_tensor({70, 4}, rng);
    net::ExecContext one{net::Backend::Parallel, true, 1};
    net::ExecContext four{net::Backend::Parallel, true, 4};
    const auto g1 = net::backward(p, net::forward(spec, p, x, one).cache, d, one);
    const auto g4 = net::backward(p, net::forward(spec, p, x, four).cache, d, four);
    CHECK(g1 == g4);
}

TEST_CASE("fast conv kernels match the reference loops")
{
    Rng rng(51);
    for (std::size_t cout : {5u, 8u, 16u, 32u, 64u}) {
        for (std::size_t cin : {1u, 3u, 8u}) {
            const net::Shape3 s{7, 9, cin};
            const Tensor in = oracle::random_tensor({s.size()}, rng);
            const Tensor w = oracle::random_tensor({9 * cin * cout}, rng);
            const Tensor b = oracle::random_tensor({cout}, rng);
            const std::size_t osz = 5 * 7 * cout;
            std::vector<float> o1(osz), o2(osz);
            net::ref::conv3x3_forward(in.data(), s, w.data(), b.data(), cout, o1.data());
            net::fast::conv3x3_forward(in.data(), s, w.data(), b.data(), cout, o2.data());
            for (std::size_t i = 0; i < osz; ++i) {
                CHECK(std::abs(o1[i] - o2[i]) <= 1e-4f * (1.0f + std::abs(o1[i])));
            }
            const Tensor dout = oracle::random_tensor({osz}, rng);
            std::vector<float> dw1(w.size()), dw2(w.size()), db1(cout), db2(cout), di1(s.size()), di2(s.size());
            std::vector<float> wt(w.size()), scratch(9 * cin);
            net::fast::transpose_conv_weight(w.data(), cin, cout, wt.data());
            net::ref::conv3x3_backward(in.data(), s, w.data(), cout, dout.data(), dw1.data(), db1.data(), di1.data());
            net::fast::conv3x3_backward(in.data(), s, wt.data(), cout, dout.data(), dw2.data(), db2.data(), di2.data(),
                                        scratch.data());
            for (std::size_t i = 0; i < dw1.size(); ++i) {
                CHECK(std::abs(dw1[i] - dw2[i]) <= 1e-4f * (1.0f + std::abs(dw1[i])));
            }
            for (std::size_t i = 0; i < cout; ++i) {
                CHECK(std::abs(db1[i] - db2[i]) <= 1e-4f * (1.0f + std::abs(db1[i])));
            }
            for (std::size_t i = 0; i < di1.size(); ++i) {
                CHECK(std::abs(di1[i] - di2[i]) <= 1e-4f * (1.0f + std::abs(di1[i])));
            }
        }
    }
}

TEST_CASE("max-pool routes each gradient to the first maximum")
{
    const net::Shape3 s{2, 2, 1};
    const float in[4] = {1.0f, 1.0f, 1.0f, 1.0f};
    float out = 0.0f;
    std::uint32_t arg = 99;
    net::ref::maxpool2x2_forward(in, s, &out, &arg);
    CHECK(arg == 0);
    float din[4];
    const float dout = 3.0f;
    net::ref::maxpool2x2_backward(s, &dout, &arg, din);
    CHECK(din[0] == 3.0f);
    CHECK(din[1] + din[2] + din[3] == 0.0f);
}

TEST_CASE("softmax cross-entropy values")
{
    SUBCASE("uniform logits give ln K")
    {
        for (std::size_t k : {2u, 10u, 100u}) {
            const std::vector<std::uint16_t> y{0};
            const auto r = net::softmax_cross_entropy(Tensor({1, k}), y);
            CHECK(std::abs(r.mean_loss - std::log(static_cast<double>(k))) <= 1e-6);
        }
        const std::vector<std::uint16_t> y{0};
        CHECK(net::softmax_cross_entropy(Tensor({1, 2}), y).mean_loss == doctest::Approx(0.693147).epsilon(1e-6));
    }
    SUBCASE("large logits stay finite")
    {
        const std::vector<std::uint16_t> y{0};
        const auto r = net::softmax_cross_entropy(Tensor({1, 2}, std::vector<float>{1000.0f, 0.0f}), y);
        CHECK(std::isfinite(r.mean_loss));
        CHECK(r.mean_loss == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(r.dlogits.all_finite());
    }
    SUBCASE("logits [1,2,3] with label 1")
    {
        const std::vector<double> l{1, 2, 3};
        const double expect = oracle::lse(l) - 2.0;
        const std::vector<std::uint16_t> y{1};
        const auto r = net::softmax_cross_entropy(Tensor({1, 3}, std::vector<float>{1, 2, 3}), y);
        CHECK(std::abs(r.mean_loss - expect) <= 1e-6);
        CHECK(expect == doctest::Approx(1.40760596));
    }
    SUBCASE("labels out of range")
    {
        const std::vector<std::uint16_t> y{3};
        CHECK_THROWS_AS(net::softmax_cross_entropy(Tensor({1, 3}), y), ValidationError);
    }
}

TEST_CASE("softmax cross-entropy gradient matches finite differences")
{
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        const std::size_t k = 2 + rng.below(9);
        const Tensor logits = oracle::random_tensor({n, k}, rng, 2.0);
        const auto y = random_labels(n, k, rng);
        const auto r = net::softmax_cross_entropy(logits, y);
        std::vector<double> l(logits.values().begin(), logits.values().end());
        CHECK(std::abs(r.mean_loss - oracle::cross_entropy(l, k, y)) <= 1e-5);
        for (std::size_t i = 0; i < l.size(); ++i) {
            const double h = 1e-5;
            const double saved = l[i];
            l[i] = saved + h;
            const double plus = oracle::cross_entropy(l, k, y);
            l[i] = saved - h;
            const double minus = oracle::cross_entropy(l, k, y);
            l[i] = saved;
            const double fd = (plus - minus) / (2 * h);
            CHECK(std::abs(r.dlogits[i] - fd) / (std::abs(r.dlogits[i]) + 1e-6) <= 1e-4);
        }
    }
}

TEST_CASE("optimizer steps")
{
    const net::ModelSpec spec{{1, 1, 1}, {{LayerKind::Dense, 1}}, 2};
    SUBCASE("zero gradients leave parameters unchanged")
    {
        auto p = net::init_params(spec, 1);
        const auto before = p;
        auto st = net::make_optimizer({}, p);
        net::optimizer_step(st, p, net::zeros_like(p));
        CHECK(p == before);
        CHECK(st.step_count == 1);
    }
    SUBCASE("SGD without momentum")
    {
        auto p = net::zeros_like(net::init_params(spec, 1));
        p.encoder[0].weight[0] = 1.0f;
        auto g = net::zeros_like(p);
        g.encoder[0].weight[0] = 2.0f;
        net::OptimizerHyper h;
        h.kind = net::OptimizerKind::SgdMomentum;
        h.learning_rate = 0.1f;
        h.momentum = 0.0f;
        auto st = net::make_optimizer(h, p);
        net::optimizer_step(st, p, g);
        CHECK(p.encoder[0].weight[0] == doctest::Approx(0.8f));
    }
    SUBCASE("first Adam step moves by the learning rate")
    {
        auto p = net::zeros_like(net::init_params(spec, 1));
        auto g = net::zeros_like(p);
        g.encoder[0].weight[0] = 1.0f;
        auto st = net::make_optimizer({}, p);
        net::optimizer_step(st, p, g);
        CHECK(p.encoder[0].weight[0] == doctest::Approx(-0.001f).epsilon(1e-5));
    }
    SUBCASE("mismatched gradients are rejected")
    {
        auto p = net::init_params(spec, 1);
        auto st = net::make_optimizer({}, p);
        auto other = net::init_params(net::ModelSpec{{1, 1, 2}, {{LayerKind::Dense, 1}}, 2}, 1);
        CHECK_THROWS_AS(net::optimizer_step(st, p, other), ValidationError);
    }
}

TEST_CASE("evaluate uses argmax with lowest-index ties")
{
    const auto spec = oracle::small_mlp(3, 4, 2);
    const auto zero = net::zeros_like(net::init_params(spec, 1));
    const Tensor x({5, 3}, 1.0f);
    const std::vector<std::uint16_t> y{0, 1, 0, 1, 1};
    CHECK(net::evaluate(spec, zero, x, y) == doctest::Approx(0.4));
    CHECK_THROWS_AS(net::evaluate(spec, zero, Tensor({0, 3}), std::vector<std::uint16_t>{}), ValidationError);

    Rng rng(71);
    const auto spec3 = oracle::small_mlp(4, 6, 3);
    const auto p = net::init_params(spec3, 4);
    const Tensor x20 = oracle::random_tensor({20, 4}, rng);
    const auto shadow_logits = oracle::shadow_forward(oracle::shadow(spec3, p), x20);
    std::vector<std::uint16_t> labels = random_labels(20, 3, rng);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 3; ++k) {
            if (shadow_logits[i * 3 + k] > shadow_logits[i * 3 + best]) {
                best = k;
            }
        }
        hits += best == labels[i] ? 1 : 0;
    }
    CHECK(net::evaluate(spec3, p, x20, labels) == doctest::Approx(hits / 20.0));

    const auto pred = net::argmax_rows(net::forward(spec3, p, x20).logits);
    for (std::size_t i = 0; i < 20; ++i) {
        labels[i] = static_cast<std::uint16_t>(pred[i]);
    }
    CHECK(net::evaluate(spec3, p, x20, labels) == 1.0);
}

TEST_CASE("checkpoints round-trip exactly")
{
    const auto spec = oracle::small_cnn(10, 3, 4);
    const net::Checkpoint ckpt{spec, net::init_params(spec, 12), {"a", "b", "c", "d"}};
    const auto path = std::filesystem::temp_directory_path() / "c2f_test_ckpt.json";
    net::save_checkpoint(ckpt, path);
    const auto back = net::load_checkpoint(path);
    CHECK(back.spec == spec);
    CHECK(back.params == ckpt.params);
    CHECK(back.class_names == ckpt.class_names);
    std::filesystem::remove(path);
}

TEST_CASE("finite-difference oracle flags a corrupted gradient")
{
    Rng rng(81);
    const auto spec = oracle::small_mlp(4, 5, 4);
    const auto p = net::init_params(spec, 6);
    const Tensor x = oracle::random_tensor({3, 4}, rng);
    const Tensor w = oracle::random_tensor({3, 4}, rng);
    auto g = net::backward(p, net::forward(spec, p, x).cache, w);
    g.predictor.weight[3] *= 1.01f;
    Rng pick(1);
    const auto rep = oracle::finite_difference_check(spec, p, x, w, g, 1e-3, 1000, pick);
    CHECK(rep.worst > 1e-3);
}
