#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "histoclahe/metrics.hpp"
#include "histoclahe/network.hpp"
#include "histoclahe/raster.hpp"
#include "histoclahe/tensor.hpp"

namespace histoclahe {

struct Sample {
  Tensor input;
  std::size_t label = 0;
};

struct TrainHyper {
  double learning_rate = 0.02;
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;  // shuffle order
};

struct TrainResult {
  Network network;
  std::vector<double> loss_trace;  // mean sample loss per epoch
};

class TrainingDivergence : public std::runtime_error {
 public:
  explicit TrainingDivergence(std::size_t epoch)
      : std::runtime_error("training diverged (non-finite loss) in epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Plain mini-batch SGD from He-uniform initialization (spec.seed). Each
/// epoch visits the samples in a fresh permutation drawn from hyper.seed and
/// applies theta -= lr * mean batch gradient. Bit-deterministic.
TrainResult train_classifier(const NetworkSpec& spec, std::span<const Sample> dataset, const TrainHyper& hyper);

struct Evaluation {
  std::vector<int> predictions;
  ConfusionMatrix confusion;  // class 1 is the positive class
};

Evaluation evaluate_classifier(const Network& network, std::span<const Sample> dataset);

/// Resizes to the network's spatial input (nearest neighbour) and scales
/// intensities to v/255 - 0.5.
Tensor raster_to_input(const Raster& raster, const Shape& input_shape);

/// Binary parameter file: 8-byte magic "HCNNPAR1", u64 spec fingerprint,
/// u64 parameter count, then every parameter as a little-endian IEEE-754
/// double in layer order.
std::vector<std::uint8_t> serialize_parameters(const Network& network);
Network deserialize_parameters(std::span<const std::uint8_t> bytes, const NetworkSpec& spec);
void save_parameters(const std::filesystem::path& path, const Network& network);
Network load_parameters(const std::filesystem::path& path, const NetworkSpec& spec);

/// "epoch,loss" CSV with 1-based epochs.
std::string loss_trace_csv(std::span<const double> trace);

}  // namespace histoclahe
