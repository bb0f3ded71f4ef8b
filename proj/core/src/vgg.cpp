#include "histoclahe/network.hpp"

namespace histoclahe {

NetworkSpec vgg16_descriptor() {
  constexpr std::size_t kBlocks[5][2] = {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}};
  NetworkSpec spec;
  spec.input_shape = {3, 224, 224};
  for (const auto& [channels, depth] : kBlocks) {
    for (std::size_t i = 0; i < depth; ++i) {
      spec.layers.push_back(LayerSpec::zero_pad(1));
      spec.layers.push_back(LayerSpec::conv(channels, 3));
      spec.layers.push_back(LayerSpec::relu());
    }
    spec.layers.push_back(LayerSpec::maxpool());
  }
  spec.layers.push_back(LayerSpec::fully_connected(4096));
  spec.layers.push_back(LayerSpec::relu());
  spec.layers.push_back(LayerSpec::fully_connected(4096));
  spec.layers.push_back(LayerSpec::relu());
  spec.layers.push_back(LayerSpec::fully_connected(1000));
  spec.layers.push_back(LayerSpec::softmax_output());
  return spec;
}

}  // namespace histoclahe
