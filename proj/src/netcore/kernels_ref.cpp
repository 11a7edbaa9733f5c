#include "c2f/netcore/kernels.hpp"

namespace c2f::net::ref {

namespace {

inline std::size_t hwc(Shape3 s, std::size_t y, std::size_t x, std::size_t c)
{
    return (y * s.width + x) * s.channels + c;
}

inline std::size_t conv_w(std::size_t cin, std::size_t cout, std::size_t ky, std::size_t kx,
                          std::size_t ci, std::size_t co)
{
    return ((ky * 3 + kx) * cin + ci) * cout + co;
}

}  // namespace

void conv3x3_forward(const float* in, Shape3 s, const float* weight, const float* bias,
                     std::size_t out_channels, float* out)
{
    const Shape3 os{s.height - 2, s.width - 2, out_channels};
    for (std::size_t y = 0; y < os.height; ++y) {
        for (std::size_t x = 0; x < os.width; ++x) {
            for (std::size_t co = 0; co < out_channels; ++co) {
                float acc = bias[co];
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        for (std::size_t ci = 0; ci < s.channels; ++ci) {
                            acc += in[hwc(s, y + ky, x + kx, ci)] *
                                   weight[conv_w(s.channels, out_channels, ky, kx, ci, co)];
                        }
                    }
                }
                out[hwc(os, y, x, co)] = acc;
            }
        }
    }
}

void conv3x3_backward(const float* in, Shape3 s, const float* weight, std::size_t out_channels,
                      const float* dout, float* dweight, float* dbias, float* din)
{
    const Shape3 os{s.height - 2, s.width - 2, out_channels};
    if (din != nullptr) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            din[i] = 0.0f;
        }
    }
    for (std::size_t y = 0; y < os.height; ++y) {
        for (std::size_t x = 0; x < os.width; ++x) {
            for (std::size_t co = 0; co < out_channels; ++co) {
                const float g = dout[hwc(os, y, x, co)];
                dbias[co] += g;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        for (std::size_t ci = 0; ci < s.channels; ++ci) {
                            const std::size_t wi = conv_w(s.channels, out_channels, ky, kx, ci, co);
                            const std::size_t ii = hwc(s, y + ky, x + kx, ci);
                            dweight[wi] += in[ii] * g;
                            if (din != nullptr) {
                                din[ii] += weight[wi] * g;
                            }
                        }
                    }
                }
            }
        }
    }
}

void dense_forward(const float* in, std::size_t in_dim, const float* weight, const float* bias,
                   std::size_t out_dim, float* out)
{
    for (std::size_t o = 0; o < out_dim; ++o) {
        float acc = bias[o];
        for (std::size_t i = 0; i < in_dim; ++i) {
            acc += in[i] * weight[i * out_dim + o];
        }
        out[o] = acc;
    }
}

void dense_backward(const float* in, std::size_t in_dim, const float* weight, std::size_t out_dim,
                    const float* dout, float* dweight, float* dbias, float* din)
{
    for (std::size_t o = 0; o < out_dim; ++o) {
        dbias[o] += dout[o];
    }
    for (std::size_t i = 0; i < in_dim; ++i) {
        float acc = 0.0f;
        for (std::size_t o = 0; o < out_dim; ++o) {
            dweight[i * out_dim + o] += in[i] * dout[o];
            acc += weight[i * out_dim + o] * dout[o];
        }
        if (din != nullptr) {
            din[i] = acc;
        }
    }
}

void relu_forward(const float* in, std::size_t n, float* out)
{
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = in[i] > 0.0f ? in[i] : 0.0f;
    }
}

void relu_backward(const float* out, std::size_t n, const float* dout, float* din)
{
    for (std::size_t i = 0; i < n; ++i) {
        din[i] = out[i] > 0.0f ? dout[i] : 0.0f;
    }
}

void maxpool2x2_forward(const float* in, Shape3 s, float* out, std::uint32_t* argmax)
{
    const Shape3 os{s.height / 2, s.width / 2, s.channels};
    for (std::size_t y = 0; y < os.height; ++y) {
        for (std::size_t x = 0; x < os.width; ++x) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                std::size_t best = hwc(s, 2 * y, 2 * x, c);
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = hwc(s, 2 * y + dy, 2 * x + dx, c);
                        if (in[idx] > in[best]) {
                            best = idx;
                        }
                    }
                }
                out[hwc(os, y, x, c)] = in[best];
                argmax[hwc(os, y, x, c)] = static_cast<std::uint32_t>(best);
            }
        }
    }
}

void maxpool2x2_backward(Shape3 s, const float* dout, const std::uint32_t* argmax, float* din)
{
    const Shape3 os{s.height / 2, s.width / 2, s.channels};
    for (std::size_t i = 0; i < s.size(); ++i) {
        din[i] = 0.0f;
    }
    for (std::size_t i = 0; i < os.size(); ++i) {
        din[argmax[i]] += dout[i];
    }
}

}  // namespace c2f::net::ref
