#pragma once

// Per-sample layer kernels. `ref` holds the textbook loop nests and is the
// oracle for `fast`, whose loop order and register blocking follow the
// channel-last memory layout. Both are serial; parallelism lives in the
// batch drivers of model.cpp.

#include <cstddef>
#include <cstdint>

#include "c2f/netcore/model.hpp"

namespace c2f::net::ref {

void conv3x3_forward(const float* in, Shape3 in_shape, const float* weight, const float* bias,
                     std::size_t out_channels, float* out);
// Accumulates into dweight/dbias; writes din when non-null.
void conv3x3_backward(const float* in, Shape3 in_shape, const float* weight,
                      std::size_t out_channels, const float* dout, float* dweight, float* dbias,
                      float* din);

void dense_forward(const float* in, std::size_t in_dim, const float* weight, const float* bias,
                   std::size_t out_dim, float* out);
void dense_backward(const float* in, std::size_t in_dim, const float* weight, std::size_t out_dim,
                    const float* dout, float* dweight, float* dbias, float* din);

void relu_forward(const float* in, std::size_t n, float* out);
void relu_backward(const float* out, std::size_t n, const float* dout, float* din);

// Ties go to the first maximum in scan order.
void maxpool2x2_forward(const float* in, Shape3 in_shape, float* out, std::uint32_t* argmax);
void maxpool2x2_backward(Shape3 in_shape, const float* dout, const std::uint32_t* argmax,
                         float* din);

}  // namespace c2f::net::ref

namespace c2f::net::fast {

void conv3x3_forward(const float* in, Shape3 in_shape, const float* weight, const float* bias,
                     std::size_t out_channels, float* out);
// weight_t is the weight transposed to [cout][ky][kx][cin]; scratch holds 9 * cin floats.
void conv3x3_backward(const float* in, Shape3 in_shape, const float* weight_t,
                      std::size_t out_channels, const float* dout, float* dweight, float* dbias,
                      float* din, float* scratch);
void transpose_conv_weight(const float* weight, std::size_t in_channels,
                           std::size_t out_channels, float* weight_t);

void dense_forward(const float* in, std::size_t in_dim, const float* weight, const float* bias,
                   std::size_t out_dim, float* out);
void dense_backward(const float* in, std::size_t in_dim, const float* weight, std::size_t out_dim,
                    const float* dout, float* dweight, float* dbias, float* din);

}  // namespace c2f::net::fast
