#include <algorithm>
#include <cstring>

#include "c2f/netcore/kernels.hpp"

namespace c2f::net::fast {

namespace {

constexpr std::size_t kPixelBlock = 4;
constexpr std::size_t kRowBlock = 4;

// Output channel count as a compile-time constant lets the accumulators live
// in vector registers. Runtime-width variants handle everything else.
template <std::size_t Cout>
void conv_forward_fixed(const float* in, Shape3 s, const float* weight, const float* bias,
                        float* out)
{
    const std::size_t oh = s.height - 2;
    const std::size_t ow = s.width - 2;
    const std::size_t c = s.channels;
    const std::size_t row = 3 * c;
    for (std::size_t y = 0; y < oh; ++y) {
        std::size_t x = 0;
        for (; x + kPixelBlock <= ow; x += kPixelBlock) {
            float acc[kPixelBlock][Cout];
            for (std::size_t p = 0; p < kPixelBlock; ++p) {
                for (std::size_t co = 0; co < Cout; ++co) {
                    acc[p][co] = bias[co];
                }
            }
            for (std::size_t ky = 0; ky < 3; ++ky) {
                const float* src = in + ((y + ky) * s.width + x) * c;
                const float* wk = weight + ky * row * Cout;
                for (std::size_t k = 0; k < row; ++k) {
                    const float* wr = wk + k * Cout;
                    const float a0 = src[k];
                    const float a1 = src[k + c];
                    const float a2 = src[k + 2 * c];
                    const float a3 = src[k + 3 * c];
                    for (std::size_t co = 0; co < Cout; ++co) {
                        const float w = wr[co];
                        acc[0][co] += a0 * w;
                        acc[1][co] += a1 * w;
                        acc[2][co] += a2 * w;
                        acc[3][co] += a3 * w;
                    }
                }
            }
            float* dst = out + (y * ow + x) * Cout;
            std::memcpy(dst, acc, sizeof(acc));
        }
        for (; x < ow; ++x) {
            float acc[Cout];
            for (std::size_t co = 0; co < Cout; ++co) {
                acc[co] = bias[co];
            }
            for (std::size_t ky = 0; ky < 3; ++ky) {
                const float* src = in + ((y + ky) * s.width + x) * c;
                const float* wk = weight + ky * row * Cout;
                for (std::size_t k = 0; k < row; ++k) {
                    const float a = src[k];
                    const float* wr = wk + k * Cout;
                    for (std::size_t co = 0; co < Cout; ++co) {
                        acc[co] += a * wr[co];
                    }
                }
            }
            std::memcpy(out + (y * ow + x) * Cout, acc, sizeof(acc));
        }
    }
}

void conv_forward_any(const float* in, Shape3 s, const float* weight, const float* bias,
                      std::size_t cout, float* out)
{
    const std::size_t oh = s.height - 2;
    const std::size_t ow = s.width - 2;
    const std::size_t row = 3 * s.channels;
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            float* acc = out + (y * ow + x) * cout;
            std::copy(bias, bias + cout, acc);
            for (std::size_t ky = 0; ky < 3; ++ky) {
                const float* src = in + ((y + ky) * s.width + x) * s.channels;
                const float* wk = weight + ky * row * cout;
                for (std::size_t k = 0; k < row; ++k) {
                    const float a = src[k];
                    const float* wr = wk + k * cout;
                    for (std::size_t co = 0; co < cout; ++co) {
                        acc[co] += a * wr[co];
                    }
                }
            }
        }
    }
}

// dweight row (ky, k) accumulates sum over output pixels of in[patch] * dout[pixel].
template <std::size_t Cout>
void conv_weight_grad_fixed(const float* in, Shape3 s, const float* dout, float* dweight)
{
    const std::size_t oh = s.height - 2;
    const std::size_t ow = s.width - 2;
    const std::size_t row = 3 * s.channels;
    for (std::size_t ky = 0; ky < 3; ++ky) {
        std::size_t k = 0;
        for (; k + kRowBlock <= row; k += kRowBlock) {
            float acc[kRowBlock][Cout] = {};
            for (std::size_t y = 0; y < oh; ++y) {
                const float* src_row = in + (y + ky) * s.width * s.channels + k;
                const float* g_row = dout + y * ow * Cout;
                for (std::size_t x = 0; x < ow; ++x) {
                    const float* src = src_row + x * s.channels;
                    const float* g = g_row + x * Cout;
                    const float a0 = src[0];
                    const float a1 = src[1];
                    const float a2 = src[2];
                    const float a3 = src[3];
                    for (std::size_t co = 0; co < Cout; ++co) {
                        acc[0][co] += a0 * g[co];
                        acc[1][co] += a1 * g[co];
                        acc[2][co] += a2 * g[co];
                        acc[3][co] += a3 * g[co];
                    }
                }
            }
            for (std::size_t r = 0; r < kRowBlock; ++r) {
                float* dw = dweight + (ky * row + k + r) * Cout;
                for (std::size_t co = 0; co < Cout; ++co) {
                    dw[co] += acc[r][co];
                }
            }
        }
        for (; k < row; ++k) {
            float acc[Cout] = {};
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    const float a = in[((y + ky) * s.width + x) * s.channels + k];
                    const float* g = dout + (y * ow + x) * Cout;
                    for (std::size_t co = 0; co < Cout; ++co) {
                        acc[co] += a * g[co];
                    }
                }
            }
            float* dw = dweight + (ky * row + k) * Cout;
            for (std::size_t co = 0; co < Cout; ++co) {
                dw[co] += acc[co];
            }
        }
    }
}

void conv_weight_grad_any(const float* in, Shape3 s, std::size_t cout, const float* dout,
                          float* dweight)
{
    const std::size_t oh = s.height - 2;
    const std::size_t ow = s.width - 2;
    const std::size_t row = 3 * s.channels;
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            const float* g = dout + (y * ow + x) * cout;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                const float* src = in + ((y + ky) * s.width + x) * s.channels;
                for (std::size_t k = 0; k < row; ++k) {
                    const float a = src[k];
                    float* dw = dweight + (ky * row + k) * cout;
                    for (std::size_t co = 0; co < cout; ++co) {
                        dw[co] += a * g[co];
                    }
                }
            }
        }
    }
}

}  // namespace

void conv3x3_forward(const float* in, Shape3 s, const float* weight, const float* bias,
                     std::size_t out_channels, float* out)
{
    switch (out_channels) {
    case 8: conv_forward_fixed<8>(in, s, weight, bias, out); break;
    case 16: conv_forward_fixed<16>(in, s, weight, bias, out); break;
    case 32: conv_forward_fixed<32>(in, s, weight, bias, out); break;
    case 64: conv_forward_fixed<64>(in, s, weight, bias, out); break;
    default: conv_forward_any(in, s, weight, bias, out_channels, out); break;
    }
}

void transpose_conv_weight(const float* weight, std::size_t in_channels, std::size_t out_channels,
                           float* weight_t)
{
    const std::size_t rows = 9 * in_channels;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t co = 0; co < out_channels; ++co) {
            weight_t[co * rows + r] = weight[r * out_channels + co];
        }
    }
}

void conv3x3_backward(const float* in, Shape3 s, const float* weight_t, std::size_t out_channels,
                      const float* dout, float* dweight, float* dbias, float* din, float* scratch)
{
    const std::size_t oh = s.height - 2;
    const std::size_t ow = s.width - 2;
    const std::size_t pixels = oh * ow;

    for (std::size_t p = 0; p < pixels; ++p) {
        const float* g = dout + p * out_channels;
        for (std::size_t co = 0; co < out_channels; ++co) {
            dbias[co] += g[co];
        }
    }

    switch (out_channels) {
    case 8: conv_weight_grad_fixed<8>(in, s, dout, dweight); break;
    case 16: conv_weight_grad_fixed<16>(in, s, dout, dweight); break;
    case 32: conv_weight_grad_fixed<32>(in, s, dout, dweight); break;
    case 64: conv_weight_grad_fixed<64>(in, s, dout, dweight); break;
    default: conv_weight_grad_any(in, s, out_channels, dout, dweight); break;
    }

    if (din == nullptr) {
        return;
    }
    std::fill(din, din + s.size(), 0.0f);
    const std::size_t row = 3 * s.channels;
    const std::size_t patch = 3 * row;
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            const float* g = dout + (y * ow + x) * out_channels;
            std::fill(scratch, scratch + patch, 0.0f);
            for (std::size_t co = 0; co < out_channels; ++co) {
                const float gc = g[co];
                if (gc == 0.0f) {
                    continue;
                }
                const float* wt = weight_t + co * patch;
                for (std::size_t k = 0; k < patch; ++k) {
                    scratch[k] += gc * wt[k];
                }
            }
            for (std::size_t ky = 0; ky < 3; ++ky) {
                float* dst = din + ((y + ky) * s.width + x) * s.channels;
                const float* src = scratch + ky * row;
                for (std::size_t k = 0; k < row; ++k) {
                    dst[k] += src[k];
                }
            }
        }
    }
}

void dense_forward(const float* in, std::size_t in_dim, const float* weight, const float* bias,
                   std::size_t out_dim, float* out)
{
    std::copy(bias, bias + out_dim, out);
    for (std::size_t i = 0; i < in_dim; ++i) {
        const float a = in[i];
        if (a == 0.0f) {
            continue;
        }
        const float* wr = weight + i * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
            out[o] += a * wr[o];
        }
    }
}

void dense_backward(const float* in, std::size_t in_dim, const float* weight, std::size_t out_dim,
                    const float* dout, float* dweight, float* dbias, float* din)
{
    for (std::size_t o = 0; o < out_dim; ++o) {
        dbias[o] += dout[o];
    }
    for (std::size_t i = 0; i < in_dim; ++i) {
        const float a = in[i];
        const float* wr = weight + i * out_dim;
        float* dw = dweight + i * out_dim;
        if (a != 0.0f) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                dw[o] += a * dout[o];
            }
        }
        if (din != nullptr) {
            float acc = 0.0f;
            for (std::size_t o = 0; o < out_dim; ++o) {
                acc += wr[o] * dout[o];
            }
            din[i] = acc;
        }
    }
}

}  // namespace c2f::net::fast
