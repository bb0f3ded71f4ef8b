#include <filesystem>
#include <random>

#include "doctest.h"
#include "histoclahe/training.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

using namespace histoclahe;

TEST_CASE("TinyVGG fits the separable toy set with a settling loss") {
  const auto set = toy::separable_set();
  const TrainResult result = train_classifier(tiny_vgg(21), set, toy::capacity_hyper());
  REQUIRE(result.loss_trace.size() == 200);
  CHECK(toy::training_accuracy(result.network, set) == 1.0);
  CHECK(toy::worst_increase(result.loss_trace, 9) <= 1e-6);
  CHECK(result.loss_trace.back() < result.loss_trace.front());
}

TEST_CASE("training is bit-deterministic") {
  const auto set = toy::separable_set(2);
  TrainHyper hyper;
  hyper.epochs = 5;
  hyper.batch_size = 3;
  hyper.seed = 9;
  const TrainResult a = train_classifier(tiny_vgg(4), set, hyper);
  const TrainResult b = train_classifier(tiny_vgg(4), set, hyper);
  CHECK(a.network.parameters() == b.network.parameters());
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(serialize_parameters(a.network) == serialize_parameters(b.network));

  hyper.seed = 10;
  const TrainResult c = train_classifier(tiny_vgg(4), set, hyper);
  CHECK(c.network.parameters() != a.network.parameters());
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  const auto set = toy::separable_set(3);
  TrainHyper hyper;
  hyper.learning_rate = 0.0;
  hyper.epochs = 4;
  const TrainResult result = train_classifier(tiny_vgg(8), set, hyper);
  CHECK(result.network.parameters() == Network::he_uniform(tiny_vgg(8)).parameters());
  for (double loss : result.loss_trace) CHECK(loss == result.loss_trace.front());
}

TEST_CASE("divergence aborts with the epoch index") {
  auto set = toy::separable_set(4);
  TrainHyper hyper;
  hyper.learning_rate = 1e300;
  hyper.epochs = 10;
  try {
    (void)train_classifier(tiny_vgg(1), set, hyper);
    FAIL("expected TrainingDivergence");
  } catch (const TrainingDivergence& e) {
    CHECK(e.epoch() >= 1);
    CHECK(e.epoch() <= 10);
  }
}

TEST_CASE("training rejects bad inputs") {
  const auto set = toy::separable_set();
  CHECK_THROWS_AS(train_classifier(tiny_vgg(1), std::span<const Sample>{}, TrainHyper{}), std::invalid_argument);
  auto bad_label = set;
  bad_label[0].label = 2;
  CHECK_THROWS_AS(train_classifier(tiny_vgg(1), bad_label, TrainHyper{}), std::invalid_argument);
  TrainHyper zero_batch;
  zero_batch.batch_size = 0;
  CHECK_THROWS_AS(train_classifier(tiny_vgg(1), set, zero_batch), std::invalid_argument);
}

TEST_CASE("evaluate_classifier agrees with direct enumeration") {
  std::mt19937_64 rng(151);
  const Network net = Network::he_uniform(tiny_vgg(17));
  std::vector<Sample> set;
  for (std::size_t i = 0; i < 20; ++i) set.push_back({oracle::random_tensor(rng, {1, 32, 32}), i % 2});
  const Evaluation eval = evaluate_classifier(net, set);
  REQUIRE(eval.predictions.size() == set.size());

  ConfusionMatrix direct;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Tensor z = net.logits(set[i].input);
    const int pred = z[1] > z[0] ? 1 : 0;
    CHECK(eval.predictions[i] == pred);
    const bool pos_truth = set[i].label == 1;
    if (pred == 1 && pos_truth) ++direct.tp;
    if (pred == 1 && !pos_truth) ++direct.fp;
    if (pred == 0 && !pos_truth) ++direct.tn;
    if (pred == 0 && pos_truth) ++direct.fn;
  }
  CHECK(eval.confusion == direct);
}

TEST_CASE("a constant-output network on a balanced set scores 0.5 accuracy") {
  const Network zero(tiny_vgg(0));
  const auto set = toy::separable_set();
  const auto row = compute_metrics(evaluate_classifier(zero, set).confusion);
  CHECK(row.accuracy == 0.5);
  CHECK((row.sensitivity == 0.0 || row.specificity == 0.0));
}

TEST_CASE("raster_to_input scales and resizes") {
  const Raster r(2, 2, std::vector<std::uint8_t>{0, 255, 51, 102});
  const Tensor t = raster_to_input(r, {1, 4, 4});
  REQUIRE(t.shape() == Shape{1, 4, 4});
  CHECK(t.at(0, 0, 0) == -0.5);
  CHECK(t.at(0, 0, 3) == 0.5);
  CHECK(std::abs(t.at(0, 3, 0) - (51.0 / 255.0 - 0.5)) < 1e-15);
}

TEST_CASE("parameter serialization round trip and validation") {
  const Network net = Network::he_uniform(tiny_vgg(23));
  const auto bytes = serialize_parameters(net);
  CHECK(bytes.size() == 8 + 8 + 8 + 8 * 17050);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "HCNNPAR1");
  CHECK(deserialize_parameters(bytes, tiny_vgg(0)).parameters() == net.parameters());

  CHECK_THROWS(deserialize_parameters(bytes, tiny_vgg(0, 3)));
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS(deserialize_parameters(truncated, tiny_vgg(0)));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS(deserialize_parameters(bad_magic, tiny_vgg(0)));

  const auto path = std::filesystem::temp_directory_path() / "histoclahe_params_test.bin";
  save_parameters(path, net);
  CHECK(load_parameters(path, tiny_vgg(0)).parameters() == net.parameters());
  std::filesystem::remove(path);
}

TEST_CASE("loss trace CSV") {
  const std::vector<double> trace{0.5, 0.25};
  CHECK(loss_trace_csv(trace) == "epoch,loss\n1,0.500000000000\n2,0.250000000000\n");
}
