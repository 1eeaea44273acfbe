#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bib/matrix.hpp"
#include "bib/numerics.hpp"

namespace bib {

enum class Reduction { Mean, Sum };
enum class Topology { Star, Sequential, AllPairs };

// Class re-balancing knobs: m drives the per-class loss weights, gamma the
// per-class self-distillation temperatures.
struct RebalanceParams {
  double m = 0.0;
  double gamma = 0.0;

  // w_i = K * (1/d_i)^m / sum_j (1/d_j)^m with d_i = n_i / N. Sums to K.
  std::vector<double> weights(const std::vector<std::size_t>& counts) const {
    const std::size_t K = counts.size();
    std::vector<double> w(K);
    double total = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      if (counts[i] == 0) throw std::invalid_argument("empty class");
      w[i] = std::pow(1.0 / static_cast<double>(counts[i]), m);
      total += w[i];
    }
    for (double& v : w) v = static_cast<double>(K) * v / total;
    return w;
  }

  // T_i = (n_max / n_i)^gamma >= 1; all ones when gamma = 0.
  std::vector<double> temperatures(const std::vector<std::size_t>& counts) const {
    std::size_t n_max = 0;
    for (std::size_t n : counts) n_max = std::max(n_max, n);
    std::vector<double> t(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) throw std::invalid_argument("empty class");
      t[i] = std::pow(static_cast<double>(n_max) / static_cast<double>(counts[i]), gamma);
    }
    return t;
  }
};

struct BibLossConfig {
  double beta = 0.0;
  RebalanceParams rebalance;
  Reduction reduction = Reduction::Mean;
};

struct MbibConfig {
  BibLossConfig bib;
  std::vector<double> tap_coefficients;  // (a, b, ...); the final tap gets 1
  Topology topology = Topology::Star;
  bool dedupe_student_bsc = false;
};

struct LossValueAndGrads {
  double value = 0.0;
  std::vector<Matrix> grads;  // one per logits argument, same order as passed
};

// q_s(y_j | v) = n_j e^{f_j} / sum_k n_k e^{f_k}, computed as
// softmax(logits + log n).
inline Matrix balanced_posterior(const Matrix& logits, const std::vector<std::size_t>& counts) {
  if (logits.cols() != counts.size())
    throw std::invalid_argument("balanced_posterior: counts length mismatch");
  Matrix adjusted = logits;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) throw std::invalid_argument("empty class");
    const double log_n = std::log(static_cast<double>(counts[j]));
    for (std::size_t i = 0; i < logits.rows(); ++i) adjusted(i, j) += log_n;
  }
  return softmax(adjusted);
}

// Balanced softmax cross-entropy: per-sample -w_{y_i} log q_s(y_i | logits_i)
// over the log-count-adjusted posterior. Mean reduction divides by the sum of
// active class weights, so the scale is independent of batch composition.
inline LossValueAndGrads bsc_loss(const Matrix& logits, const std::vector<std::size_t>& labels,
                                  const RebalanceParams& rebalance,
                                  const std::vector<std::size_t>& counts,
                                  Reduction reduction = Reduction::Mean) {
  const std::size_t B = logits.rows(), K = logits.cols();
  if (labels.size() != B) throw std::invalid_argument("bsc_loss: labels length mismatch");
  for (std::size_t l : labels)
    if (l >= K) throw std::invalid_argument("bsc_loss: label out of range");

  const std::vector<double> w = rebalance.weights(counts);

  Matrix adjusted = logits;
  for (std::size_t j = 0; j < K; ++j) {
    const double log_n = std::log(static_cast<double>(counts[j]));
    for (std::size_t i = 0; i < B; ++i) adjusted(i, j) += log_n;
  }
  const Matrix log_q = log_softmax(adjusted);

  double loss_sum = 0.0, weight_sum = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    loss_sum += -w[labels[i]] * log_q(i, labels[i]);
    weight_sum += w[labels[i]];
  }
  const double scale = reduction == Reduction::Mean ? 1.0 / weight_sum : 1.0;

  LossValueAndGrads out;
  out.value = loss_sum * scale;
  Matrix grad(B, K);
  for (std::size_t i = 0; i < B; ++i) {
    const double wi = w[labels[i]] * scale;
    for (std::size_t j = 0; j < K; ++j) {
      const double q = std::exp(log_q(i, j));
      grad(i, j) = wi * (q - (j == labels[i] ? 1.0 : 0.0));
    }
  }
  out.grads.push_back(std::move(grad));
  return out;
}

// Variational self-distillation: batch-mean KL between the temperature-scaled
// teacher and student softmaxes. The teacher is detached, so its returned
// gradient is identically zero; the value keeps the teacher entropy term.
inline LossValueAndGrads vsd_loss(const Matrix& teacher_logits, const Matrix& student_logits,
                                  const RebalanceParams& rebalance,
                                  const std::vector<std::size_t>& counts) {
  if (!teacher_logits.same_shape(student_logits))
    throw std::invalid_argument("vsd_loss: shape mismatch");
  const std::size_t B = teacher_logits.rows(), K = teacher_logits.cols();
  const std::vector<double> temps = rebalance.temperatures(counts);
  if (temps.size() != K) throw std::invalid_argument("vsd_loss: counts length mismatch");

  Matrix t_scaled = teacher_logits, s_scaled = student_logits;
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      t_scaled(i, j) /= temps[j];
      s_scaled(i, j) /= temps[j];
    }
  const Matrix log_p = log_softmax(t_scaled);
  const Matrix log_s = log_softmax(s_scaled);

  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      const double p = std::exp(log_p(i, j));
      if (p > 0.0) total += p * (log_p(i, j) - log_s(i, j));
    }

  LossValueAndGrads out;
  out.value = total / static_cast<double>(B);
  out.grads.emplace_back(B, K);  // teacher: detached, zero
  Matrix s_grad(B, K);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      const double sigma = std::exp(log_s(i, j));
      const double p = std::exp(log_p(i, j));
      s_grad(i, j) = (sigma - p) / (temps[j] * static_cast<double>(B));
    }
  out.grads.push_back(std::move(s_grad));
  return out;
}

// Loss_BIB = BSC(teacher) + BSC(student) + beta * VSD(teacher -> student).
// Grads: [teacher, student]; the VSD term contributes nothing to the teacher.
inline LossValueAndGrads bib_loss(const Matrix& teacher_logits, const Matrix& student_logits,
                                  const std::vector<std::size_t>& labels,
                                  const std::vector<std::size_t>& counts,
                                  const BibLossConfig& config) {
  LossValueAndGrads t = bsc_loss(teacher_logits, labels, config.rebalance, counts, config.reduction);
  LossValueAndGrads s = bsc_loss(student_logits, labels, config.rebalance, counts, config.reduction);
  LossValueAndGrads v = vsd_loss(teacher_logits, student_logits, config.rebalance, counts);

  LossValueAndGrads out;
  out.value = t.value + s.value + config.beta * v.value;
  Matrix s_grad = std::move(s.grads[0]);
  for (std::size_t i = 0; i < s_grad.size(); ++i)
    s_grad.raw()[i] += config.beta * v.grads[1].raw()[i];
  out.grads.push_back(std::move(t.grads[0]));
  out.grads.push_back(std::move(s_grad));
  return out;
}

namespace detail {

// Directed BIB edges (teacher node, student node, coefficient) over nodes
// 0..L-1 (taps) and L (z). Star and sequential use coefficients (a, b, .., 1);
// all_pairs is the set union of both edge lists, with the shared (last tap, z)
// edge counted once.
inline std::vector<std::tuple<std::size_t, std::size_t, double>> mbib_edges(
    std::size_t num_taps, const std::vector<double>& coeffs, Topology topology) {
  if (coeffs.size() + 1 != num_taps)
    throw std::invalid_argument("mbib_loss: coefficient/tap count mismatch");
  std::vector<double> c = coeffs;
  c.push_back(1.0);
  const std::size_t z = num_taps;
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
  if (topology == Topology::Star || topology == Topology::AllPairs)
    for (std::size_t t = 0; t < num_taps; ++t) edges.emplace_back(t, z, c[t]);
  if (topology == Topology::Sequential || topology == Topology::AllPairs) {
    const std::size_t last = topology == Topology::AllPairs ? num_taps - 1 : num_taps;
    for (std::size_t t = 0; t + 1 <= last; ++t) edges.emplace_back(t, t + 1, c[t]);
  }
  return edges;
}

}  // namespace detail

// Mixture of BIBs over tap logits [v1, .., vL] and z logits. Returns grads in
// tap order followed by z. The student-side BSC inside each term means a
// node's BSC weight is the sum of its incident coefficients (z gets
// sum(c) + ... under star); dedupe_student_bsc caps z's weight at 1.
inline LossValueAndGrads mbib_loss(const std::vector<Matrix>& tap_logits, const Matrix& z_logits,
                                   const std::vector<std::size_t>& labels,
                                   const std::vector<std::size_t>& counts,
                                   const MbibConfig& config) {
  const std::size_t L = tap_logits.size();
  if (L == 0) throw std::invalid_argument("mbib_loss: no taps");
  for (const Matrix& t : tap_logits)
    if (!t.same_shape(z_logits)) throw std::invalid_argument("mbib_loss: shape mismatch");

  const auto edges = detail::mbib_edges(L, config.tap_coefficients, config.topology);
  auto node_logits = [&](std::size_t i) -> const Matrix& {
    return i < L ? tap_logits[i] : z_logits;
  };

  // Per-node BSC weight accumulated over incident edges.
  std::vector<double> bsc_weight(L + 1, 0.0);
  for (const auto& [t, s, c] : edges) {
    bsc_weight[t] += c;
    bsc_weight[s] += c;
  }
  if (config.dedupe_student_bsc && bsc_weight[L] > 1.0) bsc_weight[L] = 1.0;

  LossValueAndGrads out;
  for (std::size_t i = 0; i <= L; ++i)
    out.grads.emplace_back(z_logits.rows(), z_logits.cols());

  for (std::size_t i = 0; i <= L; ++i) {
    if (bsc_weight[i] == 0.0) continue;
    LossValueAndGrads b = bsc_loss(node_logits(i), labels, config.bib.rebalance, counts,
                                   config.bib.reduction);
    out.value += bsc_weight[i] * b.value;
    for (std::size_t k = 0; k < out.grads[i].size(); ++k)
      out.grads[i].raw()[k] += bsc_weight[i] * b.grads[0].raw()[k];
  }
  for (const auto& [t, s, c] : edges) {
    if (c == 0.0 || config.bib.beta == 0.0) continue;
    LossValueAndGrads v = vsd_loss(node_logits(t), node_logits(s), config.bib.rebalance, counts);
    out.value += c * config.bib.beta * v.value;
    for (std::size_t k = 0; k < out.grads[s].size(); ++k)
      out.grads[s].raw()[k] += c * config.bib.beta * v.grads[1].raw()[k];
  }
  return out;
}

// Mean of the two classifier outputs; the deployment-time prediction rule.
inline Matrix ensemble_logits(const Matrix& f_logits, const Matrix& g_logits) {
  if (!f_logits.same_shape(g_logits))
    throw std::invalid_argument("ensemble_logits: shape mismatch");
  Matrix out = f_logits;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.raw()[i] = 0.5 * (f_logits.raw()[i] + g_logits.raw()[i]);
  return out;
}

// Mean of the two softmax outputs, for the probability-averaging variant.
inline Matrix ensemble_probabilities(const Matrix& f_logits, const Matrix& g_logits) {
  if (!f_logits.same_shape(g_logits))
    throw std::invalid_argument("ensemble_probabilities: shape mismatch");
  Matrix pf = softmax(f_logits), pg = softmax(g_logits);
  for (std::size_t i = 0; i < pf.size(); ++i) pf.raw()[i] = 0.5 * (pf.raw()[i] + pg.raw()[i]);
  return pf;
}

}  // namespace bib
