#pragma once

#include <cstddef>

#include "histoclahe/tensor.hpp"

namespace histoclahe {

// Layer kernels. Each backward function takes the forward input plus the
// gradient of the loss w.r.t. the forward output and applies the chain rule.

/// Stride-1 valid convolution. input [C_in,H,W], kernels [C_out,C_in,k,k],
/// bias [C_out] -> [C_out, H-k+1, W-k+1].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);

struct Conv2dGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_output);

/// 2x2 window, stride 2. Ties resolve to the first cell in row-major order.
Tensor maxpool2_forward(const Tensor& input);
Tensor maxpool2_backward(const Tensor& input, const Tensor& grad_output);

Tensor relu_forward(const Tensor& input);
/// Gradient passes only where input > 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_output);

/// Any-rank input is flattened to n values; weights [m,n], bias [m] -> [m].
Tensor fully_connected_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct FullyConnectedGrads {
  Tensor input;  // shaped like the forward input
  Tensor weights;
  Tensor bias;
};
FullyConnectedGrads fully_connected_backward(const Tensor& input, const Tensor& weights,
                                             const Tensor& grad_output);

/// Zero border of `pad` pixels on each side of every channel.
Tensor zero_pad_forward(const Tensor& input, std::size_t pad);
Tensor zero_pad_backward(const Tensor& grad_output, std::size_t pad);

/// Max-subtracted softmax.
Tensor softmax(const Tensor& logits);

struct SoftmaxLoss {
  double loss = 0.0;
  Tensor grad;  // softmax(logits) - onehot(true_class)
};
SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::size_t true_class);

}  // namespace histoclahe
