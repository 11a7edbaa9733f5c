// Times forward and backward passes of the parallel and reference backends.
#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "c2f/netcore/loss.hpp"
#include "c2f/netcore/model.hpp"
#include "c2f/rng.hpp"

using namespace c2f;

namespace {

template <typename F>
double best_of(int reps, F&& f)
{
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

net::ModelSpec cnn(std::size_t side, std::size_t c1, std::size_t c2, std::size_t c3, std::size_t k)
{
    using net::LayerKind;
    return {{side, side, 3},
            {{LayerKind::Conv3x3, c1}, {LayerKind::ReLU, 0}, {LayerKind::MaxPool2x2, 0},
             {LayerKind::Conv3x3, c2}, {LayerKind::ReLU, 0}, {LayerKind::MaxPool2x2, 0},
             {LayerKind::Conv3x3, c3}, {LayerKind::ReLU, 0}, {LayerKind::Flatten, 0},
             {LayerKind::Dense, 64},   {LayerKind::ReLU, 0}},
            k};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::size_t batch = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 128;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
    std::printf("%-14s %8s %12s %12s %12s %12s %8s\n", "model", "batch", "ref fwd ms", "par fwd ms", "ref bwd ms",
                "par bwd ms", "speedup");
    for (auto widths : {std::array<std::size_t, 3>{8, 16, 16}, std::array<std::size_t, 3>{16, 32, 32},
                        std::array<std::size_t, 3>{32, 64, 64}}) {
        const net::ModelSpec spec = cnn(32, widths[0], widths[1], widths[2], 30);
        const net::ModelParams params = net::init_params(spec, 1);
        Rng rng(2);
        Tensor x({batch, 32, 32, 3});
        for (float& v : x.values()) {
            v = static_cast<float>(rng.uniform());
        }
        std::vector<std::uint16_t> y(batch);
        for (auto& v : y) {
            v = static_cast<std::uint16_t>(rng.below(30));
        }
        net::ExecContext ref{net::Backend::Reference};
        net::ExecContext par{net::Backend::Parallel};
        const auto fr = net::forward(spec, params, x, par);
        const auto loss = net::softmax_cross_entropy(fr.logits, y);
        const double rf = best_of(reps, [&] { net::forward(spec, params, x, ref); });
        const double pf = best_of(reps, [&] { net::forward(spec, params, x, par); });
        const double rb = best_of(reps, [&] { net::backward(params, fr.cache, loss.dlogits, ref); });
        const double pb = best_of(reps, [&] { net::backward(params, fr.cache, loss.dlogits, par); });
        const std::string name = std::to_string(widths[0]) + "/" + std::to_string(widths[1]) + "/" +
                                 std::to_string(widths[2]);
        std::printf("%-14s %8zu %12.2f %12.2f %12.2f %12.2f %7.2fx\n", name.c_str(), batch, rf * 1e3, pf * 1e3,
                    rb * 1e3, pb * 1e3, (rf + rb) / (pf + pb));
    }
    return 0;
}
