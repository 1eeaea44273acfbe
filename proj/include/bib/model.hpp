#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bib/losses.hpp"
#include "bib/matrix.hpp"
#include "bib/numerics.hpp"

namespace bib {

struct Affine {
  Matrix weight;             // [in x out]
  std::vector<double> bias;  // [out]

  Matrix apply(const Matrix& x) const { return add_bias(matmul(x, weight), bias); }
};

// Feedforward stand-in for the CNN1/CNN2/CNN3 + FC trunk: each affine+ReLU
// stage emits an observation v_t with its own K-wide classifier; z is an
// affine bottleneck on the last observation, classified by g.
struct MultiTapNet {
  std::vector<Affine> stages;       // stage t: v_{t-1} -> v_t (ReLU)
  std::vector<Affine> classifiers;  // tap t: v_t -> K logits (h, u, f, ...)
  Affine head_z;                    // v_last -> z
  Affine classifier_g;              // z -> K logits

  std::size_t num_taps() const { return stages.size(); }
  std::size_t input_dim() const { return stages.front().weight.rows(); }
  std::size_t num_classes() const { return classifier_g.weight.cols(); }
  std::size_t z_dim() const { return head_z.weight.cols(); }
};

struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre_activations;  // per stage, before ReLU
  std::vector<Matrix> observations;     // v_1 .. v_T
  std::vector<Matrix> tap_logits;       // classifier outputs per tap
  Matrix z;
  Matrix g_logits;
};

// Parameter-shaped gradient bundle; layout mirrors MultiTapNet.
struct NetGrads {
  std::vector<Affine> stages;
  std::vector<Affine> classifiers;
  Affine head_z;
  Affine classifier_g;
};

namespace detail {

inline Affine init_affine(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Affine a;
  a.weight = random_uniform(in, out, -bound, bound, rng);
  a.bias.assign(out, 0.0);
  return a;
}

inline Affine zeros_like(const Affine& a) {
  Affine z;
  z.weight = Matrix(a.weight.rows(), a.weight.cols());
  z.bias.assign(a.bias.size(), 0.0);
  return z;
}

}  // namespace detail

// dims = [input, w_1, .., w_T]; one tap per stage. Weights are fan-in scaled
// uniform, biases zero. d_z = 0 picks half the last stage width.
inline MultiTapNet init_net(const std::vector<std::size_t>& dims, std::size_t K,
                            std::size_t d_z, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("init_net: need input dim and >= 1 stage");
  for (std::size_t w : dims)
    if (w < 1) throw std::invalid_argument("init_net: zero layer width");
  if (d_z == 0) d_z = std::max<std::size_t>(1, dims.back() / 2);

  MultiTapNet net;
  for (std::size_t t = 0; t + 1 < dims.size(); ++t)
    net.stages.push_back(detail::init_affine(dims[t], dims[t + 1], rng));
  for (std::size_t t = 0; t + 1 < dims.size(); ++t)
    net.classifiers.push_back(detail::init_affine(dims[t + 1], K, rng));
  net.head_z = detail::init_affine(dims.back(), d_z, rng);
  net.classifier_g = detail::init_affine(d_z, K, rng);
  return net;
}

inline ForwardTrace forward(const MultiTapNet& net, const Matrix& batch) {
  if (batch.cols() != net.input_dim()) throw std::invalid_argument("forward: input dim mismatch");
  ForwardTrace trace;
  trace.input = batch;
  const Matrix* prev = &trace.input;
  for (std::size_t t = 0; t < net.stages.size(); ++t) {
    trace.pre_activations.push_back(net.stages[t].apply(*prev));
    trace.observations.push_back(relu(trace.pre_activations.back()));
    prev = &trace.observations.back();
    trace.tap_logits.push_back(net.classifiers[t].apply(trace.observations[t]));
  }
  trace.z = net.head_z.apply(trace.observations.back());
  trace.g_logits = net.classifier_g.apply(trace.z);
  return trace;
}

namespace detail {

// x: layer input, grad_out: dL/d(output); accumulates into param grads and
// returns dL/dx.
inline Matrix backprop_affine(const Affine& layer, const Matrix& x, const Matrix& grad_out,
                              Affine& grad) {
  if (grad_out.rows() != x.rows() || grad_out.cols() != layer.weight.cols())
    throw std::invalid_argument("backward: gradient shape mismatch");
  Matrix wg = matmul_at_b(x, grad_out);
  for (std::size_t i = 0; i < wg.size(); ++i) grad.weight.raw()[i] += wg.raw()[i];
  for (std::size_t r = 0; r < grad_out.rows(); ++r)
    for (std::size_t c = 0; c < grad_out.cols(); ++c) grad.bias[c] += grad_out(r, c);
  return matmul_a_bt(grad_out, layer.weight);
}

}  // namespace detail

// Exact chain rule over the shared trunk: gradients from every tap classifier
// and from z accumulate additively into the stages they flow through.
// tap_logit_grads holds dL/d(tap logits) per tap; g_logit_grad is dL/d(g logits).
inline NetGrads backward(const MultiTapNet& net, const ForwardTrace& trace,
                         const std::vector<Matrix>& tap_logit_grads,
                         const Matrix& g_logit_grad) {
  if (tap_logit_grads.size() != net.num_taps())
    throw std::invalid_argument("backward: tap gradient count mismatch");

  NetGrads grads;
  for (const Affine& s : net.stages) grads.stages.push_back(detail::zeros_like(s));
  for (const Affine& c : net.classifiers) grads.classifiers.push_back(detail::zeros_like(c));
  grads.head_z = detail::zeros_like(net.head_z);
  grads.classifier_g = detail::zeros_like(net.classifier_g);

  Matrix dz = detail::backprop_affine(net.classifier_g, trace.z, g_logit_grad, grads.classifier_g);
  Matrix dv = detail::backprop_affine(net.head_z, trace.observations.back(), dz, grads.head_z);

  for (std::size_t t = net.num_taps(); t-- > 0;) {
    Matrix dv_tap = detail::backprop_affine(net.classifiers[t], trace.observations[t],
                                            tap_logit_grads[t], grads.classifiers[t]);
    for (std::size_t i = 0; i < dv.size(); ++i) dv.raw()[i] += dv_tap.raw()[i];
    // ReLU mask, then through the stage affine
    for (std::size_t i = 0; i < dv.size(); ++i)
      if (trace.pre_activations[t].raw()[i] <= 0.0) dv.raw()[i] = 0.0;
    const Matrix& x = t == 0 ? trace.input : trace.observations[t - 1];
    dv = detail::backprop_affine(net.stages[t], x, dv, grads.stages[t]);
  }
  return grads;
}

// Argmax per row, ties broken toward the lower class index.
inline std::vector<std::size_t> argmax_rows(const Matrix& logits) {
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

// Deployment prediction: argmax of the mean of the final-tap classifier f and
// the bottleneck classifier g.
inline std::vector<std::size_t> predict(const MultiTapNet& net, const Matrix& batch) {
  const ForwardTrace trace = forward(net, batch);
  return argmax_rows(ensemble_logits(trace.tap_logits.back(), trace.g_logits));
}

// --- checkpoint format: text, hexfloat values, bit-exact round-trip ---

namespace detail {

inline void write_affine(std::ofstream& out, const Affine& a) {
  char buf[40];
  out << a.weight.rows() << ' ' << a.weight.cols() << '\n';
  for (std::size_t i = 0; i < a.weight.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", a.weight.raw()[i]);
    out << buf << (i + 1 == a.weight.size() ? '\n' : ' ');
  }
  for (std::size_t i = 0; i < a.bias.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", a.bias[i]);
    out << buf << (i + 1 == a.bias.size() ? '\n' : ' ');
  }
}

inline Affine read_affine(std::ifstream& in) {
  std::size_t rows, cols;
  if (!(in >> rows >> cols)) throw std::runtime_error("checkpoint: truncated header");
  Affine a;
  a.weight = Matrix(rows, cols);
  std::string tok;
  for (std::size_t i = 0; i < a.weight.size(); ++i) {
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated weights");
    a.weight.raw()[i] = std::strtod(tok.c_str(), nullptr);
  }
  a.bias.resize(cols);
  for (std::size_t i = 0; i < cols; ++i) {
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated bias");
    a.bias[i] = std::strtod(tok.c_str(), nullptr);
  }
  return a;
}

}  // namespace detail

inline void save_checkpoint(const MultiTapNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << "mbibnet 1\n" << net.num_taps() << '\n';
  for (const Affine& s : net.stages) detail::write_affine(out, s);
  for (const Affine& c : net.classifiers) detail::write_affine(out, c);
  detail::write_affine(out, net.head_z);
  detail::write_affine(out, net.classifier_g);
}

inline MultiTapNet load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "mbibnet" || version != 1)
    throw std::runtime_error("load_checkpoint: unrecognized format");
  std::size_t taps = 0;
  in >> taps;
  MultiTapNet net;
  for (std::size_t t = 0; t < taps; ++t) net.stages.push_back(detail::read_affine(in));
  for (std::size_t t = 0; t < taps; ++t) net.classifiers.push_back(detail::read_affine(in));
  net.head_z = detail::read_affine(in);
  net.classifier_g = detail::read_affine(in);
  return net;
}

}  // namespace bib
