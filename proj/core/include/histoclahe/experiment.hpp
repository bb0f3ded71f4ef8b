#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "histoclahe/config.hpp"
#include "histoclahe/metrics.hpp"
#include "histoclahe/training.hpp"

namespace histoclahe {

inline constexpr const char* kArmRaw = "no_clahe";
inline constexpr const char* kArmClahe = "clahe";

/// Settings of one experiment arm. The two arms of a run differ only in `clahe`.
struct ArmConfig {
  std::string name;
  std::string dataset_identity;
  double split_ratio = 0.0;
  std::uint64_t split_seed = 0;
  NetworkSpec network;
  TrainHyper hyper;
  std::optional<ClaheParams> clahe;
};

/// Hash of everything in an arm except its name and CLAHE setting.
std::uint64_t arm_fingerprint_without_clahe(const ArmConfig& arm);

/// Builds both arms of a run; throws std::logic_error if they differ in
/// anything but preprocessing.
std::pair<ArmConfig, ArmConfig> make_arms(const ExperimentConfig& config);

class ArmDivergence : public TrainingDivergence {
 public:
  ArmDivergence(std::string arm, std::size_t epoch)
      : TrainingDivergence(epoch), arm_(std::move(arm)),
        message_("arm " + arm_ + ": training diverged (non-finite loss) in epoch " + std::to_string(epoch)) {}
  const std::string& arm() const noexcept { return arm_; }
  const char* what() const noexcept override { return message_.c_str(); }

 private:
  std::string arm_;
  std::string message_;
};

struct ArmResult {
  std::string name;
  NamedMetrics metrics;
  std::vector<double> loss_trace;
  Network network;
};

struct ExperimentResult {
  std::vector<ArmResult> arms;  // no_clahe, then clahe
  Report report;
  std::size_t eval_size = 0;
};

/// Trains one arm on the train split of `manifest` and scores it on the eval split.
ArmResult run_arm(const ArmConfig& arm, const DatasetManifest& manifest);

/// Loads or synthesizes the dataset, splits it once, trains the raw and the
/// CLAHE arm with identical seeds, evaluates each on its held-out images,
/// and writes report.csv/.json, loss_<arm>.csv and model_<arm>.bin into
/// config.output_dir (skipped when output_dir is empty).
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Samples of one split role turned into network inputs, optionally CLAHE-enhanced.
std::vector<Sample> to_samples(const DatasetManifest& manifest, SplitRole role, const Shape& input_shape,
                               const std::optional<ClaheParams>& clahe);

}  // namespace histoclahe
