#pragma once

#include <span>
#include <vector>

#include "tensor/tensor.hpp"

// Differentiable operations over NCHW tensors. Every op validates shapes,
// throws ShapeError on violations, and records a backward closure on the
// active tape when any input requires a gradient.
namespace focusfuse::FOCUSFUSE_PRECISION::ops {

// Output spatial size of a convolution/pooling window; may be <= 0 for
// invalid configurations.
constexpr int64_t window_output_size(int64_t in, int64_t kernel, int64_t stride,
                                     int64_t padding, int64_t dilation = 1) {
  const int64_t extent = dilation * (kernel - 1) + 1;
  const int64_t span = in + 2 * padding - extent;
  return span < 0 ? 0 : span / stride + 1;
}

// weight [C_out, C_in, k, k]; bias has C_out elements or is empty. Zero padding.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride = 1,
              int padding = 0, int dilation = 1);

Tensor avg_pool2d(const Tensor& x, int window, int stride);
// Backward routes the gradient to the first maximal element in row-major order.
Tensor max_pool2d(const Tensor& x, int window, int stride);

// 2x bilinear upsampling with half-pixel-centre alignment: output pixel o
// samples input coordinate (o + 0.5) / 2 - 0.5, clamped to the border.
Tensor upsample_bilinear_x2(const Tensor& x);

Tensor concat_channels(std::span<const Tensor> xs);
inline Tensor concat_channels(std::initializer_list<Tensor> xs) {
  return concat_channels(std::span<const Tensor>(xs.begin(), xs.size()));
}

// a holds one slope per channel.
Tensor prelu(const Tensor& x, const Tensor& a);
Tensor leaky_relu(const Tensor& x, real slope);
Tensor sigmoid(const Tensor& x);
// (tanh(x) + 1) / 2, a tanh squashed into (0, 1).
Tensor tanh_unit(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, real factor);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Non-differentiable helpers.
Tensor softmax_channels(const Tensor& logits);

}  // namespace focusfuse::FOCUSFUSE_PRECISION::ops
