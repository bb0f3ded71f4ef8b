#include "histoclahe/experiment.hpp"

#include <cstdio>
#include <sstream>

namespace histoclahe {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string dataset_identity(const ExperimentConfig& config) {
  if (config.dataset_source != "synthetic") return "dir:" + fs::absolute(config.dataset_source).lexically_normal().string();
  const auto& p = config.synthetic;
  std::ostringstream out;
  out << "synthetic:" << p.per_class << ':' << p.size << ':' << p.gap << ':' << p.noise << ':' << config.seed;
  return out.str();
}

DatasetManifest load_dataset(const ExperimentConfig& config) {
  if (config.dataset_source == "synthetic") return generate_synthetic_dataset(config.synthetic, config.seed);
  return ingest_directory(config.dataset_source);
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

std::uint64_t arm_fingerprint_without_clahe(const ArmConfig& arm) {
  std::ostringstream out;
  char ratio[32];
  std::snprintf(ratio, sizeof(ratio), "%.17g", arm.split_ratio);
  char lr[32];
  std::snprintf(lr, sizeof(lr), "%.17g", arm.hyper.learning_rate);
  out << arm.dataset_identity << '|' << ratio << '|' << arm.split_seed << '|' << describe(arm.network) << '|'
      << arm.network.seed << '|' << lr << '|' << arm.hyper.epochs << '|' << arm.hyper.batch_size << '|'
      << arm.hyper.seed;
  return fnv1a(out.str());
}

std::pair<ArmConfig, ArmConfig> make_arms(const ExperimentConfig& config) {
  ArmConfig raw;
  raw.name = kArmRaw;
  raw.dataset_identity = dataset_identity(config);
  raw.split_ratio = config.split_ratio;
  raw.split_seed = mix_seed(config.seed, 101);
  raw.network = tiny_vgg(mix_seed(config.seed, 102));
  raw.hyper = config.train;
  raw.hyper.seed = mix_seed(config.seed, 103);

  ArmConfig enhanced = raw;
  enhanced.name = kArmClahe;
  enhanced.clahe = config.clahe;

  if (arm_fingerprint_without_clahe(raw) != arm_fingerprint_without_clahe(enhanced)) {
    throw std::logic_error("experiment arms differ in more than the preprocessing step");
  }
  return {raw, enhanced};
}

std::vector<Sample> to_samples(const DatasetManifest& manifest, SplitRole role, const Shape& input_shape,
                               const std::optional<ClaheParams>& clahe_params) {
  std::vector<Sample> out;
  for (const auto& s : manifest.samples) {
    if (s.split != role) continue;
    // Enhancement sees the full-resolution image; resizing happens afterwards.
    const Raster image = clahe_params ? clahe(s.image, *clahe_params) : s.image;
    out.push_back(Sample{raster_to_input(image, input_shape), static_cast<std::size_t>(s.label)});
  }
  return out;
}

ArmResult run_arm(const ArmConfig& arm, const DatasetManifest& manifest) {
  const auto train_set = to_samples(manifest, SplitRole::train, arm.network.input_shape, arm.clahe);
  const auto eval_set = to_samples(manifest, SplitRole::eval, arm.network.input_shape, arm.clahe);
  if (train_set.empty() || eval_set.empty()) throw DataError("split leaves an empty train or eval set");
  TrainResult trained = [&] {
    try {
      return train_classifier(arm.network, train_set, arm.hyper);
    } catch (const TrainingDivergence& e) {
      throw ArmDivergence(arm.name, e.epoch());
    }
  }();
  const Evaluation eval = evaluate_classifier(trained.network, eval_set);
  return ArmResult{arm.name, make_named(arm.name, eval.confusion), std::move(trained.loss_trace),
                   std::move(trained.network)};
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto [raw, enhanced] = make_arms(config);

  DatasetManifest manifest = load_dataset(config);
  manifest.validate();
  manifest = split_dataset(std::move(manifest), raw.split_ratio, raw.split_seed);

  ExperimentResult result;
  result.eval_size = manifest.count(SplitRole::eval);
  if (result.eval_size == 0 || manifest.count(SplitRole::train) == 0) {
    throw DataError("split leaves an empty train or eval set");
  }

  result.arms.push_back(run_arm(raw, manifest));
  result.arms.push_back(run_arm(enhanced, manifest));

  std::vector<NamedMetrics> rows;
  for (const auto& arm : result.arms) rows.push_back(arm.metrics);
  if (config.output_dir.empty()) {
    result.report = render_report(rows);
    return result;
  }

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw DataError("cannot create " + config.output_dir.string() + ": " + ec.message());
  result.report = write_report(rows, config.output_dir / "report.csv");
  for (const auto& arm : result.arms) {
    write_text(config.output_dir / ("loss_" + arm.name + ".csv"), loss_trace_csv(arm.loss_trace));
    save_parameters(config.output_dir / ("model_" + arm.name + ".bin"), arm.network);
  }
  write_text(config.output_dir / "config.resolved", render_config(config));
  return result;
}

}  // namespace histoclahe
