#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "histoclahe/clahe.hpp"
#include "histoclahe/dataset.hpp"
#include "histoclahe/training.hpp"

namespace histoclahe {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// "GXxGY", e.g. "8x8".
std::pair<int, int> parse_tiles(const std::string& text);
/// A positive factor or "none" (unlimited, i.e. AHE).
std::optional<double> parse_clip(const std::string& text);

/// Everything one two-arm run depends on.
struct ExperimentConfig {
  /// "synthetic", or a directory with healthy/ and diseased/ subdirectories.
  std::string dataset_source = "synthetic";
  SyntheticParams synthetic;
  double split_ratio = 0.8;
  ClaheParams clahe;
  TrainHyper train;
  std::uint64_t seed = 7;
  std::filesystem::path output_dir = "experiment_out";

  void validate() const;
};

/// Flat `key = value` document; '#' starts a comment. Recognised keys:
///   dataset.source, dataset.per_class, dataset.size, dataset.gap,
///   dataset.noise, dataset.split, clahe.tiles, clahe.clip, train.epochs,
///   train.lr, train.batch, seed, output_dir
/// Unknown keys and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical rendering; parse_config(render_config(c)) reproduces c.
std::string render_config(const ExperimentConfig& config);

}  // namespace histoclahe
