#include "histoclahe/layers.hpp"

#include <algorithm>
#include <cmath>

namespace histoclahe {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw ShapeError(message);
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  require(input.rank() == 3, "conv2d: input must be [C,H,W], got " + shape_string(input.shape()));
  require(kernels.rank() == 4, "conv2d: kernels must be [C_out,C_in,k,k]");
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = kernels.dim(0), k = kernels.dim(2);
  require(kernels.dim(1) == c_in, "conv2d: kernel input channels do not match input");
  require(kernels.dim(3) == k && k >= 1, "conv2d: kernels must be square");
  require(k <= h && k <= w, "conv2d: kernel larger than input");
  require(bias.rank() == 1 && bias.dim(0) == c_out, "conv2d: bias must be [C_out]");

  const std::size_t oh = h - k + 1, ow = w - k + 1;
  Tensor out({c_out, oh, ow});
  const double* in = input.data().data();
  const double* ker = kernels.data().data();
  double* dst = out.data().data();
  for (std::size_t o = 0; o < c_out; ++o) {
    double* plane = dst + o * oh * ow;
    std::fill(plane, plane + oh * ow, bias[o]);
    for (std::size_t c = 0; c < c_in; ++c) {
      const double* src = in + c * h * w;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double weight = ker[((o * c_in + c) * k + i) * k + j];
          for (std::size_t y = 0; y < oh; ++y) {
            const double* row = src + (y + i) * w + j;
            double* out_row = plane + y * ow;
            for (std::size_t x = 0; x < ow; ++x) out_row[x] += weight * row[x];
          }
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_output) {
  require(input.rank() == 3 && kernels.rank() == 4, "conv2d backward: bad ranks");
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = kernels.dim(0), k = kernels.dim(2);
  require(kernels.dim(1) == c_in && k <= h && k <= w, "conv2d backward: kernel/input mismatch");
  const std::size_t oh = h - k + 1, ow = w - k + 1;
  require(grad_output.shape() == Shape{c_out, oh, ow},
          "conv2d backward: grad_output shape " + shape_string(grad_output.shape()) + " does not match output");

  Conv2dGrads grads{Tensor(input.shape()), Tensor(kernels.shape()), Tensor({c_out})};
  const double* in = input.data().data();
  const double* ker = kernels.data().data();
  const double* go = grad_output.data().data();
  double* gin = grads.input.data().data();
  double* gker = grads.kernels.data().data();

  for (std::size_t o = 0; o < c_out; ++o) {
    const double* gplane = go + o * oh * ow;
    double bias_sum = 0.0;
    for (std::size_t p = 0; p < oh * ow; ++p) bias_sum += gplane[p];
    grads.bias[o] = bias_sum;
    for (std::size_t c = 0; c < c_in; ++c) {
      const double* src = in + c * h * w;
      double* gsrc = gin + c * h * w;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const std::size_t kidx = ((o * c_in + c) * k + i) * k + j;
          const double weight = ker[kidx];
          double acc = 0.0;
          for (std::size_t y = 0; y < oh; ++y) {
            const double* row = src + (y + i) * w + j;
            double* grow = gsrc + (y + i) * w + j;
            const double* g = gplane + y * ow;
            for (std::size_t x = 0; x < ow; ++x) {
              acc += g[x] * row[x];
              grow[x] += g[x] * weight;
            }
          }
          gker[kidx] = acc;
        }
      }
    }
  }
  return grads;
}

Tensor maxpool2_forward(const Tensor& input) {
  require(input.rank() == 3, "maxpool2: input must be [C,H,W]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  require(h % 2 == 0 && w % 2 == 0 && h > 0 && w > 0,
          "maxpool2: spatial dimensions must be even, got " + shape_string(input.shape()));
  Tensor out({c, h / 2, w / 2});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h / 2; ++y) {
      for (std::size_t x = 0; x < w / 2; ++x) {
        double best = input.at(ch, 2 * y, 2 * x);
        best = std::max(best, input.at(ch, 2 * y, 2 * x + 1));
        best = std::max(best, input.at(ch, 2 * y + 1, 2 * x));
        best = std::max(best, input.at(ch, 2 * y + 1, 2 * x + 1));
        out.at(ch, y, x) = best;
      }
    }
  }
  return out;
}

Tensor maxpool2_backward(const Tensor& input, const Tensor& grad_output) {
  require(input.rank() == 3, "maxpool2 backward: input must be [C,H,W]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  require(h % 2 == 0 && w % 2 == 0, "maxpool2 backward: spatial dimensions must be even");
  require(grad_output.shape() == Shape{c, h / 2, w / 2}, "maxpool2 backward: grad_output shape mismatch");
  Tensor grad(input.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h / 2; ++y) {
      for (std::size_t x = 0; x < w / 2; ++x) {
        std::size_t by = 2 * y, bx = 2 * x;
        double best = input.at(ch, by, bx);
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const double v = input.at(ch, 2 * y + dy, 2 * x + dx);
            if (v > best) {
              best = v;
              by = 2 * y + dy;
              bx = 2 * x + dx;
            }
          }
        }
        grad.at(ch, by, bx) += grad_output.at(ch, y, x);
      }
    }
  }
  return grad;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = v < 0.0 ? 0.0 : v;  // NaN propagates
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_output) {
  require(input.shape() == grad_output.shape(), "relu backward: shape mismatch");
  Tensor grad(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) grad[i] = input[i] > 0.0 ? grad_output[i] : 0.0;
  return grad;
}

Tensor fully_connected_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require(weights.rank() == 2, "fully_connected: weights must be [m,n]");
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  require(input.size() == n, "fully_connected: input has " + std::to_string(input.size()) +
                                 " values, weights expect " + std::to_string(n));
  require(bias.rank() == 1 && bias.dim(0) == m, "fully_connected: bias must be [m]");
  Tensor out({m});
  const double* x = input.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = weights.data().data() + r * n;
    double acc = bias[r];
    for (std::size_t i = 0; i < n; ++i) acc += row[i] * x[i];
    out[r] = acc;
  }
  return out;
}

FullyConnectedGrads fully_connected_backward(const Tensor& input, const Tensor& weights,
                                             const Tensor& grad_output) {
  require(weights.rank() == 2, "fully_connected backward: weights must be [m,n]");
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  require(input.size() == n, "fully_connected backward: input size mismatch");
  require(grad_output.size() == m, "fully_connected backward: grad_output size mismatch");
  FullyConnectedGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({m})};
  const double* x = input.data().data();
  double* gx = grads.input.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    const double g = grad_output[r];
    grads.bias[r] = g;
    const double* row = weights.data().data() + r * n;
    double* grow = grads.weights.data().data() + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      grow[i] = g * x[i];
      gx[i] += g * row[i];
    }
  }
  return grads;
}

Tensor zero_pad_forward(const Tensor& input, std::size_t pad) {
  require(input.rank() == 3, "zero_pad: input must be [C,H,W]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  Tensor out({c, h + 2 * pad, w + 2 * pad});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) out.at(ch, y + pad, x + pad) = input.at(ch, y, x);
    }
  }
  return out;
}

Tensor zero_pad_backward(const Tensor& grad_output, std::size_t pad) {
  require(grad_output.rank() == 3 && grad_output.dim(1) >= 2 * pad && grad_output.dim(2) >= 2 * pad,
          "zero_pad backward: bad gradient shape");
  const std::size_t c = grad_output.dim(0), h = grad_output.dim(1) - 2 * pad, w = grad_output.dim(2) - 2 * pad;
  Tensor grad({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) grad.at(ch, y, x) = grad_output.at(ch, y + pad, x + pad);
    }
  }
  return grad;
}

Tensor softmax(const Tensor& logits) {
  require(logits.rank() == 1 && logits.size() >= 1, "softmax: logits must be a non-empty vector");
  const double peak = *std::max_element(logits.values().begin(), logits.values().end());
  Tensor p(logits.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    sum += p[i];
  }
  for (double& v : p.values()) v /= sum;
  return p;
}

SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::size_t true_class) {
  require(logits.rank() == 1 && logits.size() >= 2, "softmax_cross_entropy: need at least two logits");
  if (true_class >= logits.size()) {
    throw std::out_of_range("softmax_cross_entropy: class index " + std::to_string(true_class) +
                            " out of range");
  }
  const auto& z = logits.values();
  const std::size_t top = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  // log-sum-exp with the max term pulled out: lse = z_max + log1p(sum_{i != max} e^{z_i - z_max})
  double rest = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i != top) rest += std::exp(z[i] - z[top]);
  }
  const double log_norm = z[top] + std::log1p(rest);

  SoftmaxLoss result;
  result.loss = log_norm - z[true_class];
  result.grad = Tensor(logits.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    result.grad[i] = std::exp(z[i] - log_norm) - (i == true_class ? 1.0 : 0.0);
  }
  return result;
}

}  // namespace histoclahe
