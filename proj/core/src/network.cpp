#include "histoclahe/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "histoclahe/layers.hpp"

namespace histoclahe {

namespace {

// Maps a 64-bit draw to [0, 1) using its top 53 bits.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Shape layer_output_shape(const LayerSpec& layer, const Shape& in, bool is_last, std::size_t index) {
  const std::string where = "layer " + std::to_string(index) + ": ";
  switch (layer.kind) {
    case LayerKind::conv:
      if (in.size() != 3) throw ShapeError(where + "conv needs a [C,H,W] input, got " + shape_string(in));
      if (layer.kernel < 1 || layer.out_channels < 1) throw ShapeError(where + "conv parameters must be positive");
      if (layer.kernel > in[1] || layer.kernel > in[2]) throw ShapeError(where + "conv kernel exceeds input " + shape_string(in));
      return {layer.out_channels, in[1] - layer.kernel + 1, in[2] - layer.kernel + 1};
    case LayerKind::maxpool:
      if (in.size() != 3) throw ShapeError(where + "maxpool needs a [C,H,W] input");
      if (in[1] % 2 != 0 || in[2] % 2 != 0) throw ShapeError(where + "maxpool needs even spatial size, got " + shape_string(in));
      return {in[0], in[1] / 2, in[2] / 2};
    case LayerKind::relu:
      return in;
    case LayerKind::zero_pad:
      if (in.size() != 3) throw ShapeError(where + "zero_pad needs a [C,H,W] input");
      if (layer.pad < 1) throw ShapeError(where + "zero_pad amount must be positive");
      return {in[0], in[1] + 2 * layer.pad, in[2] + 2 * layer.pad};
    case LayerKind::fully_connected:
      if (layer.units < 1) throw ShapeError(where + "fully_connected needs at least one unit");
      return {layer.units};
    case LayerKind::softmax_output:
      if (!is_last) throw ShapeError(where + "softmax_output must be the final layer");
      if (in.size() != 1 || in[0] < 2) throw ShapeError(where + "softmax_output needs a vector of >= 2 logits");
      return in;
  }
  throw ShapeError(where + "unknown layer kind");
}

}  // namespace

std::vector<Shape> propagate_shapes(const NetworkSpec& spec) {
  if (spec.input_shape.empty() ||
      std::any_of(spec.input_shape.begin(), spec.input_shape.end(), [](std::size_t d) { return d == 0; })) {
    throw ShapeError("network input shape must be non-empty with positive dimensions");
  }
  std::vector<Shape> shapes{spec.input_shape};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    shapes.push_back(layer_output_shape(spec.layers[i], shapes.back(), i + 1 == spec.layers.size(), i));
  }
  return shapes;
}

std::uint64_t count_params(const NetworkSpec& spec) {
  const auto shapes = propagate_shapes(spec);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    if (layer.kind == LayerKind::conv) {
      total += (layer.kernel * layer.kernel * shapes[i][0] + 1) * layer.out_channels;
    } else if (layer.kind == LayerKind::fully_connected) {
      total += (shape_size(shapes[i]) + 1) * layer.units;
    }
  }
  return total;
}

std::string describe(const NetworkSpec& spec) {
  std::string out = shape_string(spec.input_shape);
  for (const auto& layer : spec.layers) {
    out += '|';
    switch (layer.kind) {
      case LayerKind::conv:
        out += "conv" + std::to_string(layer.kernel) + ":" + std::to_string(layer.out_channels);
        break;
      case LayerKind::maxpool:
        out += "pool";
        break;
      case LayerKind::relu:
        out += "relu";
        break;
      case LayerKind::zero_pad:
        out += "pad" + std::to_string(layer.pad);
        break;
      case LayerKind::fully_connected:
        out += "fc" + std::to_string(layer.units);
        break;
      case LayerKind::softmax_output:
        out += "softmax";
        break;
    }
  }
  return out;
}

std::uint64_t fingerprint(const NetworkSpec& spec) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : describe(spec)) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

NetworkSpec tiny_vgg(std::uint64_t seed, std::size_t classes) {
  return NetworkSpec{
      {1, 32, 32},
      {LayerSpec::conv(8, 3), LayerSpec::relu(), LayerSpec::conv(8, 3), LayerSpec::relu(), LayerSpec::maxpool(),
       LayerSpec::conv(16, 3), LayerSpec::relu(), LayerSpec::conv(16, 3), LayerSpec::relu(), LayerSpec::maxpool(),
       LayerSpec::fully_connected(32), LayerSpec::relu(), LayerSpec::fully_connected(classes),
       LayerSpec::softmax_output()},
      seed};
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)), shapes_(propagate_shapes(spec_)) {
  if (spec_.layers.empty() || spec_.layers.back().kind != LayerKind::softmax_output) {
    throw ShapeError("a trainable network must end with softmax_output");
  }
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& layer = spec_.layers[i];
    if (layer.kind == LayerKind::conv) {
      params_.emplace_back(Shape{layer.out_channels, shapes_[i][0], layer.kernel, layer.kernel});
      params_.emplace_back(Shape{layer.out_channels});
    } else if (layer.kind == LayerKind::fully_connected) {
      params_.emplace_back(Shape{layer.units, shape_size(shapes_[i])});
      params_.emplace_back(Shape{layer.units});
    }
  }
}

Network Network::he_uniform(NetworkSpec spec) {
  Network net(std::move(spec));
  std::mt19937_64 rng(net.spec_.seed);
  for (std::size_t p = 0; p < net.params_.size(); p += 2) {
    Tensor& weights = net.params_[p];
    const std::size_t fan_in = weights.size() / weights.dim(0);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : weights.values()) w = (2.0 * unit_uniform(rng) - 1.0) * limit;
  }
  return net;
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : params_) total += t.size();
  return total;
}

std::vector<Tensor> Network::forward_trace(const Tensor& input) const {
  if (input.shape() != spec_.input_shape) {
    throw ShapeError("network expects input " + shape_string(spec_.input_shape) + ", got " +
                     shape_string(input.shape()));
  }
  std::vector<Tensor> acts;
  acts.reserve(spec_.layers.size() + 1);
  acts.push_back(input);
  std::size_t p = 0;
  for (const auto& layer : spec_.layers) {
    const Tensor& x = acts.back();
    switch (layer.kind) {
      case LayerKind::conv:
        acts.push_back(conv2d_forward(x, params_[p], params_[p + 1]));
        p += 2;
        break;
      case LayerKind::fully_connected:
        acts.push_back(fully_connected_forward(x, params_[p], params_[p + 1]));
        p += 2;
        break;
      case LayerKind::maxpool:
        acts.push_back(maxpool2_forward(x));
        break;
      case LayerKind::relu:
        acts.push_back(relu_forward(x));
        break;
      case LayerKind::zero_pad:
        acts.push_back(zero_pad_forward(x, layer.pad));
        break;
      case LayerKind::softmax_output:
        acts.push_back(x);
        break;
    }
  }
  return acts;
}

Tensor Network::logits(const Tensor& input) const { return forward_trace(input).back(); }

std::size_t Network::predict(const Tensor& input) const {
  const Tensor z = logits(input);
  // max_element returns the first maximum, so ties go to the lowest index.
  return static_cast<std::size_t>(std::max_element(z.values().begin(), z.values().end()) - z.values().begin());
}

double Network::loss(const Tensor& input, std::size_t label) const {
  return softmax_cross_entropy(logits(input), label).loss;
}

Network::LossAndGradient Network::loss_and_gradient(const Tensor& input, std::size_t label) const {
  const auto acts = forward_trace(input);
  SoftmaxLoss head = softmax_cross_entropy(acts.back(), label);

  LossAndGradient result;
  result.loss = head.loss;
  result.gradient.resize(params_.size());
  Tensor grad = std::move(head.grad);
  std::size_t p = params_.size();
  for (std::size_t i = spec_.layers.size(); i-- > 0;) {
    const auto& layer = spec_.layers[i];
    const Tensor& x = acts[i];
    switch (layer.kind) {
      case LayerKind::conv: {
        p -= 2;
        auto g = conv2d_backward(x, params_[p], grad);
        result.gradient[p] = std::move(g.kernels);
        result.gradient[p + 1] = std::move(g.bias);
        grad = std::move(g.input);
        break;
      }
      case LayerKind::fully_connected: {
        p -= 2;
        auto g = fully_connected_backward(x, params_[p], grad);
        result.gradient[p] = std::move(g.weights);
        result.gradient[p + 1] = std::move(g.bias);
        grad = std::move(g.input);
        break;
      }
      case LayerKind::maxpool:
        grad = maxpool2_backward(x, grad);
        break;
      case LayerKind::relu:
        grad = relu_backward(x, grad);
        break;
      case LayerKind::zero_pad:
        grad = zero_pad_backward(grad, layer.pad);
        break;
      case LayerKind::softmax_output:
        break;
    }
  }
  return result;
}

double gradient_check(const Network& network, const Tensor& input, std::size_t label, double epsilon,
                      const GradientFn& analytic) {
  if (!(epsilon > 1e-7 && epsilon < 1e-3)) {
    throw std::invalid_argument("gradient_check: epsilon must lie in (1e-7, 1e-3)");
  }
  const ParameterList gradient = analytic ? analytic(network, input, label)
                                          : network.loss_and_gradient(input, label).gradient;
  if (gradient.size() != network.parameters().size()) {
    throw std::invalid_argument("gradient_check: gradient layout does not match parameters");
  }

  Network probe = network;
  double worst = 0.0;
  for (std::size_t t = 0; t < probe.parameters().size(); ++t) {
    for (std::size_t i = 0; i < probe.parameters()[t].size(); ++i) {
      double& value = probe.parameters()[t][i];
      const double saved = value;
      value = saved + epsilon;
      const double plus = probe.loss(input, label);
      value = saved - epsilon;
      const double minus = probe.loss(input, label);
      value = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw std::runtime_error("gradient_check: non-finite loss");
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double exact = gradient[t][i];
      const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-12});
      worst = std::max(worst, std::abs(exact - numeric) / scale);
    }
  }
  return worst;
}

}  // namespace histoclahe
