#include <doctest.h>

#include <cmath>

#include "bib/training.hpp"
#include "helpers.hpp"

using bib::Matrix;
using bib::MultiTapNet;
using bib::Rng;
using bib::Schedule;
using bib::TrainConfig;

TEST_CASE("cosine schedule endpoints") {
  Schedule s;
  s.kind = Schedule::Kind::Cosine;
  s.cosine.lr_final = 0.001;
  CHECK(bib::lr_at(s, 0, 100, 0.1) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(bib::lr_at(s, 100, 100, 0.1) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(bib::lr_at(s, 50, 100, 0.1) ==
        doctest::Approx(0.001 + (0.1 - 0.001) * 0.5).epsilon(1e-12));
}

TEST_CASE("step schedule reproduces the warmup + milestone recipe") {
  Schedule s;
  s.kind = Schedule::Kind::Step;
  s.step.warmup_epochs = 5;
  s.step.milestones = {160, 180};
  s.step.factor = 0.01;
  // ramp: epochs 0..4 at lr * (e+1)/5
  CHECK(bib::lr_at(s, 0, 200, 0.1) == doctest::Approx(0.02));
  CHECK(bib::lr_at(s, 4, 200, 0.1) == doctest::Approx(0.1));
  CHECK(bib::lr_at(s, 100, 200, 0.1) == doctest::Approx(0.1));
  CHECK(bib::lr_at(s, 170, 200, 0.1) == doctest::Approx(0.001));
  CHECK(bib::lr_at(s, 190, 200, 0.1) == doctest::Approx(0.00001));
}

namespace {

MultiTapNet one_param_net() {
  // 1 -> 1 net with a single nonzero parameter for scalar recurrences
  Rng rng(1);
  MultiTapNet net = bib::init_net({1, 1}, 1, 1, rng);
  net.stages[0].weight(0, 0) = 1.0;
  return net;
}

}  // namespace

TEST_CASE("sgd_step matches the momentum recurrence on a scalar") {
  MultiTapNet net = one_param_net();
  bib::NetGrads grads;
  grads.stages.push_back({Matrix(1, 1), {0.0}});
  grads.classifiers.push_back({Matrix(1, 1), {0.0}});
  grads.head_z = {Matrix(1, 1), {0.0}};
  grads.classifier_g = {Matrix(1, 1), {0.0}};

  const double lr = 0.1, momentum = 0.9, wd = 0.05;
  double param = net.stages[0].weight(0, 0);
  double buffer = 0.0;
  bib::SgdState state;
  for (int step = 0; step < 2; ++step) {
    const double g = 2.0 * param;  // grad of param^2
    grads.stages[0].weight(0, 0) = g;
    bib::sgd_step(net, grads, state, lr, momentum, wd);
    buffer = momentum * buffer + g + wd * param;
    param -= lr * buffer;
    CHECK(net.stages[0].weight(0, 0) == param);
  }
}

TEST_CASE("sgd_step degenerate cases") {
  MultiTapNet net = one_param_net();
  const MultiTapNet before = net;
  bib::NetGrads grads;
  grads.stages.push_back({Matrix(1, 1, 3.0), {0.5}});
  grads.classifiers.push_back({Matrix(1, 1), {0.0}});
  grads.head_z = {Matrix(1, 1), {0.0}};
  grads.classifier_g = {Matrix(1, 1), {0.0}};

  bib::SgdState state;
  bib::sgd_step(net, grads, state, 0.0, 0.9, 0.1);  // lr = 0: unchanged
  CHECK(net.stages[0].weight == before.stages[0].weight);

  bib::SgdState fresh;
  bib::sgd_step(net, grads, fresh, 0.1, 0.0, 0.0);  // vanilla step
  CHECK(net.stages[0].weight(0, 0) == before.stages[0].weight(0, 0) - 0.1 * 3.0);
  CHECK(net.stages[0].bias[0] == before.stages[0].bias[0] - 0.1 * 0.5);
}

namespace {

TrainConfig small_config(std::size_t epochs) {
  TrainConfig config;
  config.epochs = epochs;
  config.batch_size = 16;
  config.lr_initial = 0.05;
  config.momentum = 0.9;
  config.weight_decay = 1e-4;
  config.seed = 7;
  config.method = bib::Method::Mbib;
  config.loss.bib.beta = 1.0;
  config.loss.bib.rebalance.m = 0.1;
  config.loss.tap_coefficients = {0.1, 0.3};
  return config;
}

std::pair<bib::Dataset, bib::Dataset> small_data() {
  auto freq = bib::exponential_profile(4, 60, 10.0);
  freq.many_threshold = 30;
  freq.few_threshold = 10;
  Rng rng(5);
  return bib::synthesize_gaussian(freq, 4, 2.0, 25, rng);
}

}  // namespace

TEST_CASE("zero epochs leaves the net unchanged and the log empty") {
  auto [train_data, test_data] = small_data();
  Rng rng(8);
  MultiTapNet net = bib::init_net({4, 8, 8, 8}, 4, 4, rng);
  const MultiTapNet before = net;
  const auto log = bib::train(net, train_data, test_data, small_config(0));
  CHECK(log.empty());
  CHECK(net.stages[0].weight == before.stages[0].weight);
  CHECK(net.classifier_g.weight == before.classifier_g.weight);
}

TEST_CASE("training is deterministic in the seed") {
  auto [train_data, test_data] = small_data();
  const TrainConfig config = small_config(4);
  Rng r1(8), r2(8);
  MultiTapNet a = bib::init_net({4, 8, 8, 8}, 4, 4, r1);
  MultiTapNet b = bib::init_net({4, 8, 8, 8}, 4, 4, r2);
  const auto log_a = bib::train(a, train_data, test_data, config);
  const auto log_b = bib::train(b, train_data, test_data, config);
  CHECK(a.stages[0].weight == b.stages[0].weight);
  CHECK(a.classifier_g.weight == b.classifier_g.weight);
  REQUIRE(log_a.size() == log_b.size());
  for (std::size_t e = 0; e < log_a.size(); ++e) {
    CHECK(log_a[e].train_loss == log_b[e].train_loss);
    CHECK(log_a[e].accuracy.all == log_b[e].accuracy.all);
  }
}

TEST_CASE("logged learning rates match lr_at pointwise") {
  auto [train_data, test_data] = small_data();
  TrainConfig config = small_config(5);
  config.schedule.kind = Schedule::Kind::Cosine;
  Rng rng(8);
  MultiTapNet net = bib::init_net({4, 8, 8, 8}, 4, 4, rng);
  const auto log = bib::train(net, train_data, test_data, config);
  for (const auto& rec : log)
    CHECK(rec.lr == bib::lr_at(config.schedule, rec.epoch, config.epochs, config.lr_initial));
}

TEST_CASE("training improves over the initial network") {
  auto freq = bib::exponential_profile(10, 200, 100.0);
  freq.many_threshold = 50;
  freq.few_threshold = 10;
  Rng data_rng(11);
  auto [train_data, test_data] = bib::synthesize_gaussian(freq, 16, 1.2, 40, data_rng);

  TrainConfig config = small_config(20);
  config.batch_size = 64;
  config.lr_initial = 0.1;
  Rng init_rng(3);
  MultiTapNet net = bib::init_net({16, 32, 32, 32}, 10, 16, init_rng);
  const double acc0 = bib::evaluate(config.method, net, test_data).all;
  const auto log = bib::train(net, train_data, test_data, config);
  CHECK(log.back().accuracy.all > acc0);
}

TEST_CASE("divergence guard aborts with a diagnostic") {
  auto [train_data, test_data] = small_data();
  TrainConfig config = small_config(3);
  config.lr_initial = 1e18;  // guaranteed blow-up
  config.schedule.kind = Schedule::Kind::Step;
  config.schedule.step.warmup_epochs = 0;
  Rng rng(8);
  MultiTapNet net = bib::init_net({4, 8, 8, 8}, 4, 4, rng);
  CHECK_THROWS_AS(bib::train(net, train_data, test_data, config), bib::DivergenceError);
}

TEST_CASE("config validation") {
  TrainConfig config = small_config(10);
  config.schedule.step.milestones = {5, 3};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.schedule.step.milestones = {3, 20};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.schedule.step.milestones = {3, 5};
  config.momentum = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
