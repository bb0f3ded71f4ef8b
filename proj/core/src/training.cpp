#include "histoclahe/training.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <random>

#include "histoclahe/layers.hpp"

namespace histoclahe {

namespace {

constexpr char kMagic[8] = {'H', 'C', 'N', 'N', 'P', 'A', 'R', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= std::uint64_t{bytes[offset + static_cast<std::size_t>(b)]} << (8 * b);
  return v;
}

}  // namespace

TrainResult train_classifier(const NetworkSpec& spec, std::span<const Sample> dataset, const TrainHyper& hyper) {
  if (dataset.empty()) throw std::invalid_argument("training set is empty");
  if (hyper.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!std::isfinite(hyper.learning_rate) || hyper.learning_rate < 0.0) {
    throw std::invalid_argument("learning rate must be finite and non-negative");
  }
  const auto shapes = propagate_shapes(spec);
  const std::size_t classes = shapes.back().at(0);
  for (const auto& sample : dataset) {
    if (sample.label >= classes) throw std::invalid_argument("sample label outside the class count");
  }

  TrainResult result{Network::he_uniform(spec), {}};
  ParameterList& params = result.network.parameters();
  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    // Fisher-Yates with an explicit draw so the order does not depend on the
    // standard library's shuffle implementation.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    std::vector<double> sample_loss(dataset.size(), 0.0);
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      ParameterList sum;
      for (std::size_t b = start; b < end; ++b) {
        const Sample& sample = dataset[order[b]];
        auto step = result.network.loss_and_gradient(sample.input, sample.label);
        if (!std::isfinite(step.loss)) throw TrainingDivergence(epoch);
        sample_loss[order[b]] = step.loss;
        if (sum.empty()) {
          sum = std::move(step.gradient);
        } else {
          for (std::size_t t = 0; t < sum.size(); ++t) {
            for (std::size_t i = 0; i < sum[t].size(); ++i) sum[t][i] += step.gradient[t][i];
          }
        }
      }
      const double scale = hyper.learning_rate / static_cast<double>(end - start);
      for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t i = 0; i < params[t].size(); ++i) params[t][i] -= scale * sum[t][i];
      }
    }
    // Summed in dataset order so the trace does not depend on the shuffle.
    const double mean_loss =
        std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0) / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss)) throw TrainingDivergence(epoch);
    for (const auto& t : params) {
      if (!t.all_finite()) throw TrainingDivergence(epoch);
    }
    result.loss_trace.push_back(mean_loss);
  }
  return result;
}

Evaluation evaluate_classifier(const Network& network, std::span<const Sample> dataset) {
  if (dataset.empty()) throw std::invalid_argument("evaluation set is empty");
  Evaluation eval;
  std::vector<int> truths;
  eval.predictions.reserve(dataset.size());
  truths.reserve(dataset.size());
  for (const auto& sample : dataset) {
    eval.predictions.push_back(static_cast<int>(network.predict(sample.input)));
    truths.push_back(static_cast<int>(sample.label));
  }
  eval.confusion = tally_confusion(eval.predictions, truths, 1);
  return eval;
}

Tensor raster_to_input(const Raster& raster, const Shape& input_shape) {
  if (input_shape.size() != 3 || input_shape[0] != 1) {
    throw ShapeError("raster input needs a [1,H,W] network input, got " + shape_string(input_shape));
  }
  const Raster resized =
      resize_nearest(raster, static_cast<int>(input_shape[2]), static_cast<int>(input_shape[1]));
  Tensor out(input_shape);
  for (std::size_t i = 0; i < resized.pixels.size(); ++i) out[i] = resized.pixels[i] / 255.0 - 0.5;
  return out;
}

std::vector<std::uint8_t> serialize_parameters(const Network& network) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u64(out, fingerprint(network.spec()));
  put_u64(out, network.parameter_count());
  for (const auto& t : network.parameters()) {
    for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Network deserialize_parameters(std::span<const std::uint8_t> bytes, const NetworkSpec& spec) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::invalid_argument("not a parameter file (bad magic)");
  }
  if (get_u64(bytes, 8) != fingerprint(spec)) {
    throw std::invalid_argument("parameter file was written for a different architecture");
  }
  Network network(spec);
  const std::uint64_t count = get_u64(bytes, 16);
  if (count != network.parameter_count() || bytes.size() != 24 + 8 * count) {
    throw std::invalid_argument("parameter file has the wrong number of values");
  }
  std::size_t offset = 24;
  for (auto& t : network.parameters()) {
    for (double& v : t.values()) {
      v = std::bit_cast<double>(get_u64(bytes, offset));
      offset += 8;
    }
  }
  return network;
}

void save_parameters(const std::filesystem::path& path, const Network& network) {
  write_file(path, serialize_parameters(network));
}

Network load_parameters(const std::filesystem::path& path, const NetworkSpec& spec) {
  return deserialize_parameters(read_file(path), spec);
}

std::string loss_trace_csv(std::span<const double> trace) {
  std::string out = "epoch,loss\n";
  char buffer[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buffer, sizeof(buffer), "%zu,%.12f\n", i + 1, trace[i]);
    out += buffer;
  }
  return out;
}

}  // namespace histoclahe
