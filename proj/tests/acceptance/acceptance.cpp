// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "histoclahe/clahe.hpp"
#include "histoclahe/config.hpp"
#include "histoclahe/experiment.hpp"
#include "histoclahe/layers.hpp"
#include "histoclahe/metrics.hpp"
#include "histoclahe/network.hpp"
#include "histoclahe/raster.hpp"
#include "histoclahe/training.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

using namespace histoclahe;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kMetricsTol = 1e-6;
constexpr double kGradEps = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr double kFaultFloor = 1e-1;
constexpr std::uint64_t kParamsLow = 130'000'000;
constexpr std::uint64_t kParamsHigh = 145'000'000;
constexpr std::uint64_t kVgg16Params = 138'357'544;
constexpr double kMonotoneBand = 1e-6;
constexpr std::size_t kToyEpochs = 200;
constexpr int kReductionRasters = 100;
constexpr int kConservationTrials = 100;
constexpr std::uint64_t kBenchmarkSeeds[] = {7, 8, 9, 10, 11};
constexpr int kRequiredWins = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome metrics_exactness() {
  struct Case {
    ConfusionMatrix cm;
    double expected[5];
  };
  const Case cases[] = {{{40, 44, 4, 2}, {0.933333, 0.952381, 0.916667, 0.909091, 0.930233}},
                        {{90, 90, 1, 2}, {0.983607, 0.978261, 0.989011, 0.989011, 0.983607}}};
  double worst = 0.0;
  for (const auto& c : cases) {
    const MetricsRow r = compute_metrics(c.cm);
    const double got[5] = {r.accuracy, r.sensitivity, r.specificity, r.precision, r.f1};
    for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(got[i] - c.expected[i]));
  }
  return {worst <= kMetricsTol, fmt("max abs deviation %.2e over 10 cells", worst)};
}

Outcome clahe_reduction() {
  std::mt19937_64 rng(1001);
  int mismatched = 0;
  for (int i = 0; i < kReductionRasters; ++i) {
    const int lo = static_cast<int>(rng() % 128);
    const Raster r = oracle::random_raster(rng, 32, 32, lo, lo + 1 + static_cast<int>(rng() % 127));
    const Raster out = clahe(r, ClaheParams{1, 1, std::nullopt});
    if (out != equalize(r) || out != oracle::brute_force_equalize(r)) ++mismatched;
  }
  int violated = 0;
  for (int i = 0; i < kConservationTrials; ++i) {
    Histogram256 h;
    for (auto& b : h.bins) b = rng() % 3 == 0 ? rng() % 500 : 0;
    h.bins[rng() % 256] += 1;
    const std::uint64_t limit = 1 + rng() % 300;
    if (clip_and_redistribute(h, limit).total() != h.total()) ++violated;
  }
  return {mismatched == 0 && violated == 0,
          std::to_string(kReductionRasters) + " rasters, " + std::to_string(mismatched) + " mismatched; " +
              std::to_string(kConservationTrials) + " histograms, " + std::to_string(violated) + " not conserved"};
}

Outcome clahe_structure() {
  const int grids[] = {1, 2, 8};
  const std::optional<double> clips[] = {1.0, 2.0, std::nullopt};
  int failures = 0, combos = 0;
  for (int g : grids) {
    for (const auto& clip : clips) {
      for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{93}, std::uint8_t{255}}) {
        ++combos;
        const Raster flat(37, 29, v);
        if (clahe(flat, ClaheParams{g, g, clip}) != flat) ++failures;
      }
    }
  }
  std::mt19937_64 rng(1003);
  int non_monotone = 0, thread_mismatch = 0;
  for (int i = 0; i < 20; ++i) {
    const Raster r = oracle::random_raster(rng, 40 + i, 50 - i);
    for (int g : grids) {
      for (const auto& clip : clips) {
        const ClaheParams p{g, g, clip};
        for (const auto& lut : build_tile_luts(r, p).luts) non_monotone += !lut.is_monotone();
        const Raster one = clahe(r, p, ExecutionOptions{1});
        for (unsigned t : {2u, 4u, 7u}) thread_mismatch += clahe(r, p, ExecutionOptions{t}) != one;
      }
    }
  }
  return {failures == 0 && non_monotone == 0 && thread_mismatch == 0,
          std::to_string(combos) + " constant cases, " + std::to_string(failures) + " moved; " +
              std::to_string(non_monotone) + " non-monotone LUTs; " + std::to_string(thread_mismatch) +
              " thread mismatches"};
}

Outcome golden_enhancement() {
  const fs::path dir = fs::path(HISTOCLAHE_TEST_DATA_DIR);
  const Raster input = load_gray(dir / "golden_input_64.pgm");
  const auto expected = read_file(dir / "golden_clahe_8x8_clip2.pgm");
  const auto produced = encode_image(clahe(input, ClaheParams{8, 8, 2.0}), ImageFormat::pgm);
  std::size_t differing = 0;
  if (produced.size() == expected.size()) {
    for (std::size_t i = 0; i < produced.size(); ++i) differing += produced[i] != expected[i];
  }
  const bool same = produced == expected && input.width == 64 && input.height == 64;
  return {same, std::to_string(produced.size()) + " bytes, " + std::to_string(differing) + " differing"};
}

Outcome gradient_suite() {
  using oracle::max_relative_error;
  using oracle::numeric_gradient;
  using oracle::project;
  std::mt19937_64 rng(1005);
  double worst = 0.0;
  auto track = [&](const Tensor& a, const Tensor& n) { worst = std::max(worst, max_relative_error(a, n)); };

  {
    const Tensor x = oracle::random_tensor(rng, {2, 6, 6}), k = oracle::random_tensor(rng, {3, 2, 3, 3});
    const Tensor b = oracle::random_tensor(rng, {3}), r = oracle::random_tensor(rng, {3, 4, 4});
    const Conv2dGrads g = conv2d_backward(x, k, r);
    track(g.input, numeric_gradient([&](const Tensor& t) { return project(conv2d_forward(t, k, b), r); }, x, kGradEps));
    track(g.kernels, numeric_gradient([&](const Tensor& t) { return project(conv2d_forward(x, t, b), r); }, k, kGradEps));
    track(g.bias, numeric_gradient([&](const Tensor& t) { return project(conv2d_forward(x, k, t), r); }, b, kGradEps));
  }
  {
    const Tensor x = oracle::random_tensor(rng, {1, 4, 4}), r = oracle::random_tensor(rng, {1, 2, 2});
    track(maxpool2_backward(x, r),
          numeric_gradient([&](const Tensor& t) { return project(maxpool2_forward(t), r); }, x, kGradEps));
  }
  {
    Tensor x = oracle::random_tensor(rng, {3, 4, 4});
    for (double& v : x.values()) {
      if (std::abs(v) < 1e-3) v = 0.5;
    }
    const Tensor r = oracle::random_tensor(rng, {3, 4, 4});
    track(relu_backward(x, r), numeric_gradient([&](const Tensor& t) { return project(relu_forward(t), r); }, x, kGradEps));
  }
  {
    const Tensor x = oracle::random_tensor(rng, {8}), w = oracle::random_tensor(rng, {4, 8});
    const Tensor b = oracle::random_tensor(rng, {4}), r = oracle::random_tensor(rng, {4});
    const FullyConnectedGrads g = fully_connected_backward(x, w, r);
    track(g.input, numeric_gradient([&](const Tensor& t) { return project(fully_connected_forward(t, w, b), r); }, x, kGradEps));
    track(g.weights, numeric_gradient([&](const Tensor& t) { return project(fully_connected_forward(x, t, b), r); }, w, kGradEps));
    track(g.bias, numeric_gradient([&](const Tensor& t) { return project(fully_connected_forward(x, w, t), r); }, b, kGradEps));
  }
  {
    const Tensor x = oracle::random_tensor(rng, {2, 3, 3}), r = oracle::random_tensor(rng, {2, 5, 5});
    track(zero_pad_backward(r, 1),
          numeric_gradient([&](const Tensor& t) { return project(zero_pad_forward(t, 1), r); }, x, kGradEps));
  }
  {
    const Tensor z = oracle::random_tensor(rng, {5}, -3.0, 3.0);
    track(softmax_cross_entropy(z, 2).grad,
          numeric_gradient([&](const Tensor& t) { return softmax_cross_entropy(t, 2).loss; }, z, kGradEps));
  }
  const double layers_worst = worst;

  const Network net = Network::he_uniform(tiny_vgg(1007));
  const Tensor input = oracle::random_tensor(rng, {1, 32, 32}, -0.5, 0.5);
  const double composed = gradient_check(net, input, 1, kGradEps);

  const GradientFn flipped = [](const Network& n, const Tensor& x, std::size_t label) {
    ParameterList g = n.loss_and_gradient(x, label).gradient;
    for (auto& t : g) {
      for (double& v : t.values()) v = -v;
    }
    return g;
  };
  const NetworkSpec small{{1, 6, 6},
                          {LayerSpec::conv(2, 3), LayerSpec::relu(), LayerSpec::maxpool(), LayerSpec::fully_connected(2),
                           LayerSpec::softmax_output()},
                          1009};
  const double fault = gradient_check(Network::he_uniform(small), oracle::random_tensor(rng, {1, 6, 6}), 0, kGradEps, flipped);

  return {layers_worst < kGradTol && composed < kGradTol && fault > kFaultFloor,
          fmt("layers %.2e, TinyVGG %.2e, sign-flipped %.2e", layers_worst, composed, fault)};
}

Outcome architecture_arithmetic() {
  const NetworkSpec spec = vgg16_descriptor();
  const auto shapes = propagate_shapes(spec);
  Shape before_fc;
  std::vector<std::size_t> pooled;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind == LayerKind::maxpool) pooled.push_back(shapes[i + 1][1]);
    if (spec.layers[i].kind == LayerKind::fully_connected && before_fc.empty()) before_fc = shapes[i];
  }
  const std::uint64_t params = count_params(spec);
  const bool ok = before_fc == Shape{512, 7, 7} && pooled == std::vector<std::size_t>{112, 56, 28, 14, 7} &&
                  shapes.back() == Shape{1000} && params >= kParamsLow && params <= kParamsHigh &&
                  params == kVgg16Params;
  return {ok, "flatten " + shape_string(before_fc) + " = " + std::to_string(shape_size(before_fc)) + ", params " +
                  std::to_string(params)};
}

Outcome desk_scale_pipeline() {
  ExperimentConfig base = load_config(fs::path(HISTOCLAHE_SOURCE_DIR) / "configs" / "benchmark.cfg");
  base.output_dir.clear();
  int wins = 0;
  bool primary_seed_ok = false;
  std::string detail;
  for (std::uint64_t seed : kBenchmarkSeeds) {
    ExperimentConfig c = base;
    c.seed = seed;
    const ExperimentResult r = run_experiment(c);
    const double raw = r.arms[0].metrics.scores.f1, enhanced = r.arms[1].metrics.scores.f1;
    const bool win = enhanced >= raw;
    wins += win;
    if (seed == base.seed) primary_seed_ok = win;
    detail += fmt("%.0f:", static_cast<double>(seed)) + fmt("%.3f/%.3f ", raw, enhanced);
  }
  detail += "(no_clahe/clahe f1), wins " + std::to_string(wins) + "/" + std::to_string(std::size(kBenchmarkSeeds));
  return {primary_seed_ok && wins >= kRequiredWins, detail};
}

Outcome training_sanity() {
  const auto set = toy::separable_set();
  TrainHyper hyper = toy::capacity_hyper();
  hyper.epochs = kToyEpochs;
  const TrainResult a = train_classifier(tiny_vgg(21), set, hyper);
  const TrainResult b = train_classifier(tiny_vgg(21), set, hyper);
  const double accuracy = toy::training_accuracy(a.network, set);
  const double rise = toy::worst_increase(a.loss_trace, 9);
  const bool identical = a.network.parameters() == b.network.parameters() && a.loss_trace == b.loss_trace;
  return {accuracy == 1.0 && rise <= kMonotoneBand && identical,
          fmt("accuracy %.3f, worst rise after epoch 10 %.2e, ", accuracy, rise) +
              (identical ? "bit-identical reruns" : "reruns differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"metrics exactness", metrics_exactness},
      {"CLAHE reduction oracle", clahe_reduction},
      {"CLAHE degeneracy and structure", clahe_structure},
      {"golden enhancement", golden_enhancement},
      {"gradient suite", gradient_suite},
      {"architecture arithmetic", architecture_arithmetic},
      {"desk-scale pipeline", desk_scale_pipeline},
      {"training sanity", training_sanity},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-32s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
