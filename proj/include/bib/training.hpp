#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bib/data.hpp"
#include "bib/losses.hpp"
#include "bib/matrix.hpp"
#include "bib/metrics.hpp"
#include "bib/model.hpp"

namespace bib {

enum class Method { Ce, Bsce, Bib, Mbib, SeMbib, AllMbib };

inline Method method_from_string(const std::string& s) {
  if (s == "ce") return Method::Ce;
  if (s == "bsce") return Method::Bsce;
  if (s == "bib") return Method::Bib;
  if (s == "mbib") return Method::Mbib;
  if (s == "se_mbib") return Method::SeMbib;
  if (s == "all_mbib") return Method::AllMbib;
  throw std::invalid_argument("unknown method: " + s);
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Ce: return "ce";
    case Method::Bsce: return "bsce";
    case Method::Bib: return "bib";
    case Method::Mbib: return "mbib";
    case Method::SeMbib: return "se_mbib";
    default: return "all_mbib";
  }
}

struct StepSchedule {
  std::size_t warmup_epochs = 0;
  std::vector<std::size_t> milestones;
  double factor = 0.1;
};

struct CosineSchedule {
  double lr_final = 0.0;
};

struct Schedule {
  enum class Kind { Step, Cosine } kind = Kind::Cosine;
  StepSchedule step;
  CosineSchedule cosine;
};

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  double lr_initial = 0.01;
  double momentum = 0.9;
  double weight_decay = 3e-4;
  bool decay_biases = false;
  Schedule schedule;
  std::uint64_t seed = 0;
  Method method = Method::Mbib;
  MbibConfig loss;

  void validate() const {
    if (lr_initial <= 0.0) throw std::invalid_argument("lr_initial must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0,1)");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be nonnegative");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    for (std::size_t i = 0; i + 1 < schedule.step.milestones.size(); ++i)
      if (schedule.step.milestones[i] >= schedule.step.milestones[i + 1])
        throw std::invalid_argument("milestones must be strictly increasing");
    for (std::size_t m : schedule.step.milestones)
      if (m >= epochs) throw std::invalid_argument("milestones must be < epochs");
    if (schedule.step.factor <= 0.0 || schedule.step.factor > 1.0)
      throw std::invalid_argument("step factor must be in (0,1]");
  }
};

struct EpochRecord {
  std::size_t epoch;
  double lr;
  double train_loss;
  GroupAccuracy accuracy;
};

using TrainLog = std::vector<EpochRecord>;

// Step: linear warmup 0 -> lr over warmup epochs, then lr * factor^(#milestones
// passed). Cosine: half-cosine from lr_initial at epoch 0 to lr_final at the
// final boundary.
inline double lr_at(const Schedule& schedule, std::size_t epoch, std::size_t total_epochs,
                    double lr_initial) {
  if (schedule.kind == Schedule::Kind::Cosine) {
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return schedule.cosine.lr_final +
           (lr_initial - schedule.cosine.lr_final) * 0.5 * (1.0 + std::cos(M_PI * t));
  }
  const StepSchedule& s = schedule.step;
  if (epoch < s.warmup_epochs)
    return lr_initial * static_cast<double>(epoch + 1) / static_cast<double>(s.warmup_epochs);
  double lr = lr_initial;
  for (std::size_t m : s.milestones)
    if (epoch >= m) lr *= s.factor;
  return lr;
}

// Classic coupled SGD: buf <- mu*buf + grad + wd*param; param <- param - lr*buf.
// Weight decay applies to weights only unless decay_biases is set.
struct SgdState {
  NetGrads buffers;
  bool initialized = false;
};

namespace detail {

inline void sgd_update_affine(Affine& param, const Affine& grad, Affine& buf, double lr,
                              double momentum, double weight_decay, bool decay_bias) {
  for (std::size_t i = 0; i < param.weight.size(); ++i) {
    double g = grad.weight.raw()[i] + weight_decay * param.weight.raw()[i];
    buf.weight.raw()[i] = momentum * buf.weight.raw()[i] + g;
    param.weight.raw()[i] -= lr * buf.weight.raw()[i];
  }
  for (std::size_t i = 0; i < param.bias.size(); ++i) {
    double g = grad.bias[i] + (decay_bias ? weight_decay * param.bias[i] : 0.0);
    buf.bias[i] = momentum * buf.bias[i] + g;
    param.bias[i] -= lr * buf.bias[i];
  }
}

inline NetGrads zeros_like_net(const MultiTapNet& net) {
  NetGrads z;
  for (const Affine& s : net.stages) z.stages.push_back(zeros_like(s));
  for (const Affine& c : net.classifiers) z.classifiers.push_back(zeros_like(c));
  z.head_z = zeros_like(net.head_z);
  z.classifier_g = zeros_like(net.classifier_g);
  return z;
}

}  // namespace detail

inline void sgd_step(MultiTapNet& net, const NetGrads& grads, SgdState& state, double lr,
                     double momentum, double weight_decay, bool decay_biases = false) {
  if (!state.initialized) {
    state.buffers = detail::zeros_like_net(net);
    state.initialized = true;
  }
  for (std::size_t t = 0; t < net.stages.size(); ++t)
    detail::sgd_update_affine(net.stages[t], grads.stages[t], state.buffers.stages[t], lr,
                              momentum, weight_decay, decay_biases);
  for (std::size_t t = 0; t < net.classifiers.size(); ++t)
    detail::sgd_update_affine(net.classifiers[t], grads.classifiers[t],
                              state.buffers.classifiers[t], lr, momentum, weight_decay,
                              decay_biases);
  detail::sgd_update_affine(net.head_z, grads.head_z, state.buffers.head_z, lr, momentum,
                            weight_decay, decay_biases);
  detail::sgd_update_affine(net.classifier_g, grads.classifier_g, state.buffers.classifier_g, lr,
                            momentum, weight_decay, decay_biases);
}

// Loss dispatch over a forward trace. Returns the scalar loss plus the logit
// gradients backward() consumes. ce is plain cross-entropy on the final tap
// (uniform counts, unit weights); bsce adds adjustment + weights on the same
// single classifier; bib couples the final tap with z; the mbib variants use
// every tap.
inline double method_loss(Method method, const MbibConfig& config, const ForwardTrace& trace,
                          const std::vector<std::size_t>& labels,
                          const std::vector<std::size_t>& counts,
                          std::vector<Matrix>& tap_logit_grads, Matrix& g_logit_grad) {
  const std::size_t taps = trace.tap_logits.size();
  tap_logit_grads.assign(taps, Matrix(trace.g_logits.rows(), trace.g_logits.cols()));
  g_logit_grad = Matrix(trace.g_logits.rows(), trace.g_logits.cols());

  switch (method) {
    case Method::Ce: {
      RebalanceParams plain;  // m = 0
      std::vector<std::size_t> uniform(counts.size(), 1);
      LossValueAndGrads l = bsc_loss(trace.tap_logits.back(), labels, plain, uniform,
                                     config.bib.reduction);
      tap_logit_grads[taps - 1] = std::move(l.grads[0]);
      return l.value;
    }
    case Method::Bsce: {
      LossValueAndGrads l =
          bsc_loss(trace.tap_logits.back(), labels, config.bib.rebalance, counts,
                   config.bib.reduction);
      tap_logit_grads[taps - 1] = std::move(l.grads[0]);
      return l.value;
    }
    case Method::Bib: {
      LossValueAndGrads l =
          bib_loss(trace.tap_logits.back(), trace.g_logits, labels, counts, config.bib);
      tap_logit_grads[taps - 1] = std::move(l.grads[0]);
      g_logit_grad = std::move(l.grads[1]);
      return l.value;
    }
    default: {
      MbibConfig c = config;
      c.topology = method == Method::Mbib     ? Topology::Star
                   : method == Method::SeMbib ? Topology::Sequential
                                              : Topology::AllPairs;
      LossValueAndGrads l = mbib_loss(trace.tap_logits, trace.g_logits, labels, counts, c);
      for (std::size_t t = 0; t < taps; ++t) tap_logit_grads[t] = std::move(l.grads[t]);
      g_logit_grad = std::move(l.grads[taps]);
      return l.value;
    }
  }
}

// Single-classifier methods predict from the final tap; the bottleneck
// methods use the f/g ensemble.
inline std::vector<std::size_t> method_predict(Method method, const MultiTapNet& net,
                                               const Matrix& batch) {
  if (method == Method::Ce || method == Method::Bsce) {
    const ForwardTrace trace = forward(net, batch);
    return argmax_rows(trace.tap_logits.back());
  }
  return predict(net, batch);
}

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline GroupAccuracy evaluate(Method method, const MultiTapNet& net, const Dataset& test) {
  return group_accuracy(method_predict(method, net, test.features), test.labels,
                        test.frequency_table);
}

// Deterministic single-threaded loop: forward -> loss -> backward -> sgd_step
// per batch, balanced-test evaluation per epoch. Aborts on non-finite loss.
inline TrainLog train(MultiTapNet& net, const Dataset& train_data, const Dataset& test_data,
                      const TrainConfig& config) {
  config.validate();
  const std::vector<std::size_t>& counts = train_data.frequency_table.counts;
  Rng batch_rng = Rng(config.seed).substream("batching");
  SgdState state;
  TrainLog log;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(config.schedule, epoch, config.epochs, config.lr_initial);
    BatchIterator batches(train_data, config.batch_size, batch_rng);
    Matrix features;
    std::vector<std::size_t> labels;
    double loss_sum = 0.0;
    std::size_t batch_count = 0;
    while (batches.next(features, labels)) {
      const ForwardTrace trace = forward(net, features);
      bool finite = trace.g_logits.all_finite();
      for (const Matrix& t : trace.tap_logits) finite = finite && t.all_finite();
      if (!finite)
        throw DivergenceError("training diverged: non-finite logits at epoch " +
                              std::to_string(epoch) + " batch " + std::to_string(batch_count));
      std::vector<Matrix> tap_grads;
      Matrix g_grad;
      const double loss =
          method_loss(config.method, config.loss, trace, labels, counts, tap_grads, g_grad);
      if (!std::isfinite(loss))
        throw DivergenceError("training diverged: non-finite loss at epoch " +
                              std::to_string(epoch) + " batch " + std::to_string(batch_count));
      loss_sum += loss;
      ++batch_count;
      const NetGrads grads = backward(net, trace, tap_grads, g_grad);
      sgd_step(net, grads, state, lr, config.momentum, config.weight_decay, config.decay_biases);
    }
    log.push_back({epoch, lr, loss_sum / static_cast<double>(batch_count),
                   evaluate(config.method, net, test_data)});
  }
  return log;
}

inline void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_train_log_csv: cannot open " + path);
  out << "epoch,lr,train_loss,acc_all,acc_many,acc_medium,acc_few\n";
  char buf[160];
  for (const EpochRecord& r : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.lr,
                  r.train_loss, r.accuracy.all, r.accuracy.many, r.accuracy.medium,
                  r.accuracy.few);
    out << buf;
  }
}

}  // namespace bib
