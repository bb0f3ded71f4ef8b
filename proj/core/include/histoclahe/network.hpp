#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "histoclahe/tensor.hpp"

namespace histoclahe {

enum class LayerKind { conv, maxpool, relu, fully_connected, softmax_output, zero_pad };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t out_channels = 0;  // conv
  std::size_t kernel = 0;        // conv
  std::size_t units = 0;         // fully_connected
  std::size_t pad = 0;           // zero_pad

  static LayerSpec conv(std::size_t out_channels, std::size_t kernel) {
    return {LayerKind::conv, out_channels, kernel, 0, 0};
  }
  static LayerSpec maxpool() { return {LayerKind::maxpool}; }
  static LayerSpec relu() { return {LayerKind::relu}; }
  static LayerSpec fully_connected(std::size_t units) { return {LayerKind::fully_connected, 0, 0, units, 0}; }
  static LayerSpec softmax_output() { return {LayerKind::softmax_output}; }
  static LayerSpec zero_pad(std::size_t pad) { return {LayerKind::zero_pad, 0, 0, 0, pad}; }

  bool has_parameters() const { return kind == LayerKind::conv || kind == LayerKind::fully_connected; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Declarative architecture: input shape, ordered layers, and the seed used
/// for parameter initialization.
struct NetworkSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
};

/// Output shape after every layer; element 0 is the input shape. Throws
/// ShapeError when a layer cannot accept its predecessor's output.
std::vector<Shape> propagate_shapes(const NetworkSpec& spec);

/// Sums (k*k*c_in + 1)*c_out over conv layers and (n_in + 1)*n_out over
/// fully connected layers.
std::uint64_t count_params(const NetworkSpec& spec);

/// Canonical one-line description, e.g. "1x32x32|conv3:8|relu|pool|fc2|softmax".
/// The seed is not part of it.
std::string describe(const NetworkSpec& spec);
/// FNV-1a 64 of describe(spec).
std::uint64_t fingerprint(const NetworkSpec& spec);

/// Desk-scale VGG-style classifier on 1x32x32 input:
/// conv3(8)-relu x2, pool, conv3(16)-relu x2, pool, fc32-relu, fc2-softmax.
NetworkSpec tiny_vgg(std::uint64_t seed = 0, std::size_t classes = 2);

/// Canonical VGG-16 for 3x224x224 input: 13 padded 3x3 convolutions in five
/// blocks with 2x2 pooling, then FC-4096, FC-4096, FC-1000 and softmax.
NetworkSpec vgg16_descriptor();

/// Parameters as flat tensor list: for every conv/fully_connected layer in
/// order, its weights then its bias.
using ParameterList = std::vector<Tensor>;

/// Network instance with materialized parameters.
class Network {
 public:
  /// Zero-initialized parameters.
  explicit Network(NetworkSpec spec);

  /// He-uniform weights, U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero biases,
  /// drawn from spec.seed.
  static Network he_uniform(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const ParameterList& parameters() const { return params_; }
  ParameterList& parameters() { return params_; }
  std::size_t parameter_count() const;

  /// Output of the layer preceding softmax_output.
  Tensor logits(const Tensor& input) const;
  std::size_t predict(const Tensor& input) const;

  struct LossAndGradient {
    double loss = 0.0;
    ParameterList gradient;  // same layout as parameters()
  };
  /// Softmax cross-entropy and its gradient w.r.t. every parameter.
  LossAndGradient loss_and_gradient(const Tensor& input, std::size_t label) const;
  double loss(const Tensor& input, std::size_t label) const;

 private:
  std::vector<Tensor> forward_trace(const Tensor& input) const;

  NetworkSpec spec_;
  std::vector<Shape> shapes_;
  ParameterList params_;
};

using GradientFn = std::function<ParameterList(const Network&, const Tensor&, std::size_t)>;

/// Largest |a - n| / max(|a|, |n|, 1e-12) over all parameters, where n is the
/// central difference (L(p + eps) - L(p - eps)) / (2 eps). `analytic` defaults
/// to Network::loss_and_gradient and exists so a broken backward pass can be
/// injected. Throws std::invalid_argument unless 1e-7 < epsilon < 1e-3 and
/// std::runtime_error on a non-finite loss.
double gradient_check(const Network& network, const Tensor& input, std::size_t label, double epsilon,
                      const GradientFn& analytic = {});

}  // namespace histoclahe
