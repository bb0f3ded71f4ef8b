// histoclahe: CLAHE preprocessing and the with/without-CLAHE classification
// experiment from the command line.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "histoclahe/clahe.hpp"
#include "histoclahe/config.hpp"
#include "histoclahe/dataset.hpp"
#include "histoclahe/experiment.hpp"
#include "histoclahe/histogram.hpp"
#include "histoclahe/metrics.hpp"
#include "histoclahe/training.hpp"

namespace fs = std::filesystem;
using namespace histoclahe;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct ClaheFlags {
  std::string tiles = "8x8";
  std::string clip = "2.0";

  ClaheParams params() const {
    ClaheParams p;
    std::tie(p.grid_x, p.grid_y) = parse_tiles(tiles);
    p.clip_factor = parse_clip(clip);
    p.validate();
    return p;
  }
};

void add_clahe_flags(CLI::App* cmd, ClaheFlags& flags) {
  cmd->add_option("--tiles", flags.tiles, "Tile grid as GXxGY")->capture_default_str();
  cmd->add_option("--clip", flags.clip, "Clip factor (multiple of the mean bin count) or 'none'")
      ->capture_default_str();
}

bool parse_on_off(const std::string& value) {
  if (value == "on") return true;
  if (value == "off") return false;
  throw ConfigError("expected on|off, got '" + value + "'");
}

void write_histogram_csv(const fs::path& path, const Histogram256& hist) {
  std::string text = "bin,count\n";
  for (std::size_t v = 0; v < hist.bins.size(); ++v) {
    text += std::to_string(v) + "," + std::to_string(hist.bins[v]) + "\n";
  }
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

bool has_class_layout(const fs::path& dir) {
  return fs::is_directory(dir / class_directory(kHealthy)) && fs::is_directory(dir / class_directory(kDiseased));
}

int run_enhance(const fs::path& input, const fs::path& output, const ClaheFlags& flags, unsigned threads,
                bool dump_histograms) {
  const ClaheParams params = flags.params();
  const ExecutionOptions exec{threads};
  std::size_t count = 0;

  auto dump = [&](const fs::path& image_path, const Raster& before, const Raster& after) {
    if (!dump_histograms) return;
    fs::path base = image_path;
    base.replace_extension();
    write_histogram_csv(base.string() + ".before.hist.csv", compute_histogram(before));
    write_histogram_csv(base.string() + ".after.hist.csv", compute_histogram(after));
  };

  if (has_class_layout(input)) {
    const DatasetManifest manifest = ingest_directory(input);
    const DatasetManifest enhanced = preprocess_batch(manifest, params, output, exec);
    for (std::size_t i = 0; i < enhanced.samples.size(); ++i) {
      dump(enhanced.samples[i].source, manifest.samples[i].image, enhanced.samples[i].image);
    }
    count = enhanced.samples.size();
  } else {
    if (!fs::is_directory(input)) throw DataError("input directory not found: " + input.string());
    fs::create_directories(output);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
      if (!entry.is_regular_file()) continue;
      const auto head = read_file(entry.path());
      if (detect_format(head)) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no decodable images in " + input.string());
    for (const auto& file : files) {
      Raster image;
      try {
        image = load_gray(file);
      } catch (const ImageError& e) {
        throw DataError(file.string() + ": " + e.what());
      }
      fs::path target = output / file.filename();
      if (target.extension() != ".png") target.replace_extension(".pgm");
      const Raster result = clahe(image, params, exec);
      save_gray(target, result);
      dump(target, image, result);
      ++count;
    }
  }
  std::cout << "enhanced " << count << " image(s) into " << output.string() << '\n';
  return 0;
}

int run_synth(const fs::path& out, const SyntheticParams& params, std::uint64_t seed) {
  const DatasetManifest manifest = generate_synthetic_dataset(params, seed);
  write_dataset(manifest, out);
  std::cout << "wrote " << manifest.samples.size() << " synthetic images into " << out.string() << '\n';
  return 0;
}

int run_train(const fs::path& data, bool use_clahe, const ClaheFlags& flags, double split, std::uint64_t seed,
              std::size_t epochs, double lr, std::size_t batch, const fs::path& out) {
  ExperimentConfig config;
  config.dataset_source = data.string();
  config.split_ratio = split;
  config.clahe = flags.params();
  config.train.epochs = epochs;
  config.train.learning_rate = lr;
  config.train.batch_size = batch;
  config.seed = seed;
  config.output_dir = out;
  config.validate();

  const auto [raw, enhanced] = make_arms(config);
  const ArmConfig& arm = use_clahe ? enhanced : raw;
  DatasetManifest manifest = ingest_directory(data);
  manifest.validate();
  manifest = split_dataset(std::move(manifest), arm.split_ratio, arm.split_seed);
  const ArmResult result = run_arm(arm, manifest);

  fs::create_directories(out);
  save_parameters(out / "model.bin", result.network);
  const std::string trace = loss_trace_csv(result.loss_trace);
  write_file(out / "loss.csv", std::span(reinterpret_cast<const std::uint8_t*>(trace.data()), trace.size()));
  const std::vector<NamedMetrics> rows{result.metrics};
  const Report report = write_report(rows, out / "report.csv");
  std::cout << report.csv;
  return 0;
}

int run_eval(const fs::path& model_path, const fs::path& data, const fs::path& report_path,
             std::optional<std::string> name, bool use_clahe, const ClaheFlags& flags) {
  const NetworkSpec spec = tiny_vgg();
  const Network network = load_parameters(model_path, spec);
  DatasetManifest manifest = ingest_directory(data);
  manifest.validate();
  for (auto& s : manifest.samples) s.split = SplitRole::eval;
  const std::optional<ClaheParams> params = use_clahe ? std::optional(flags.params()) : std::nullopt;
  const auto samples = to_samples(manifest, SplitRole::eval, spec.input_shape, params);
  const Evaluation eval = evaluate_classifier(network, samples);
  const std::vector<NamedMetrics> rows{make_named(name.value_or(model_path.stem().string()), eval.confusion)};
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  const Report report = write_report(rows, report_path);
  std::cout << report.csv;
  return 0;
}

int run_report(const std::vector<fs::path>& inputs, const fs::path& out) {
  std::vector<NamedMetrics> rows;
  for (const auto& input : inputs) {
    const auto bytes = read_file(input);
    auto parsed = parse_report_csv(std::string(bytes.begin(), bytes.end()));
    rows.insert(rows.end(), parsed.begin(), parsed.end());
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const Report report = write_report(rows, out);
  std::cout << report.csv;
  return 0;
}

int run_experiment_cmd(const fs::path& config_path) {
  const ExperimentConfig config = load_config(config_path);
  const ExperimentResult result = run_experiment(config);
  std::cout << result.report.csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"histoclahe: CLAHE preprocessing and CNN classification experiments"};
  app.require_subcommand(1);

  // enhance
  auto* enhance = app.add_subcommand("enhance", "Batch CLAHE over a directory of images");
  fs::path enhance_in, enhance_out;
  ClaheFlags enhance_flags;
  unsigned threads = 1;
  bool dump_histograms = false;
  enhance->add_option("--input", enhance_in, "Input directory (flat, or healthy/ + diseased/)")->required();
  enhance->add_option("--output", enhance_out, "Output directory")->required();
  add_clahe_flags(enhance, enhance_flags);
  enhance->add_option("--threads", threads, "Worker threads")->capture_default_str();
  enhance->add_flag("--dump-histograms", dump_histograms,
                    "Write <image>.before.hist.csv and <image>.after.hist.csv (bin,count)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic two-class dataset");
  fs::path synth_out;
  SyntheticParams synth_params;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--per-class", synth_params.per_class, "Images per class")->capture_default_str();
  synth->add_option("--size", synth_params.size, "Image side length")->capture_default_str();
  synth->add_option("--gap", synth_params.gap, "Intensity band width of class-1 structures")->capture_default_str();
  synth->add_option("--noise", synth_params.noise, "Pixel noise std-dev")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train TinyVGG on a class-directory dataset");
  fs::path train_data, train_out;
  std::string train_clahe = "on";
  ClaheFlags train_flags;
  ExperimentConfig defaults;
  double train_split = defaults.split_ratio;
  std::uint64_t train_seed = defaults.seed;
  std::size_t train_epochs = defaults.train.epochs;
  double train_lr = defaults.train.learning_rate;
  std::size_t train_batch = defaults.train.batch_size;
  train->add_option("--data", train_data, "Dataset directory with healthy/ and diseased/")->required();
  train->add_option("--clahe", train_clahe, "on|off")->capture_default_str();
  add_clahe_flags(train, train_flags);
  train->add_option("--split", train_split, "Train fraction per class")->capture_default_str();
  train->add_option("--seed", train_seed, "Seed")->capture_default_str();
  train->add_option("--epochs", train_epochs, "Epochs")->capture_default_str();
  train->add_option("--lr", train_lr, "SGD learning rate")->capture_default_str();
  train->add_option("--batch", train_batch, "Mini-batch size")->capture_default_str();
  train->add_option("--out", train_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a trained model on a class-directory dataset");
  fs::path eval_model, eval_data, eval_report;
  std::string eval_clahe = "off";
  std::optional<std::string> eval_name;
  ClaheFlags eval_flags;
  eval->add_option("--model", eval_model, "Parameter file written by train")->required();
  eval->add_option("--data", eval_data, "Dataset directory with healthy/ and diseased/")->required();
  eval->add_option("--report", eval_report, "Report CSV path (a .json sibling is written too)")->required();
  eval->add_option("--name", eval_name, "Row name (defaults to the model file stem)");
  eval->add_option("--clahe", eval_clahe, "Enhance images before evaluation: on|off")->capture_default_str();
  add_clahe_flags(eval, eval_flags);

  // report
  auto* report = app.add_subcommand("report", "Merge metrics CSV files");
  std::vector<fs::path> report_inputs;
  fs::path report_out;
  report->add_option("--inputs", report_inputs, "Report CSV files")->required();
  report->add_option("--out", report_out, "Merged CSV path (a .json sibling is written too)")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run the with/without-CLAHE comparison");
  fs::path experiment_config;
  experiment->add_option("--config", experiment_config, "Key-value config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*enhance) return run_enhance(enhance_in, enhance_out, enhance_flags, threads, dump_histograms);
    if (*synth) return run_synth(synth_out, synth_params, synth_seed);
    if (*train) {
      return run_train(train_data, parse_on_off(train_clahe), train_flags, train_split, train_seed, train_epochs,
                       train_lr, train_batch, train_out);
    }
    if (*eval) return run_eval(eval_model, eval_data, eval_report, eval_name, parse_on_off(eval_clahe), eval_flags);
    if (*report) return run_report(report_inputs, report_out);
    if (*experiment) return run_experiment_cmd(experiment_config);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingDivergence& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
