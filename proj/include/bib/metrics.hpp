#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "bib/data.hpp"
#include "bib/matrix.hpp"

namespace bib {

struct GroupAccuracy {
  double all = 0.0;
  double many = 0.0;
  double medium = 0.0;
  double few = 0.0;
  std::vector<double> per_class;
};

// Per-class accuracy, averaged unweighted within each frequency group and
// over all classes. On a balanced test set `all` equals sample accuracy.
inline GroupAccuracy group_accuracy(const std::vector<std::size_t>& predictions,
                                    const std::vector<std::size_t>& labels,
                                    const ClassFrequencyTable& freq) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("group_accuracy: length mismatch");
  const std::size_t K = freq.num_classes();
  std::vector<std::size_t> correct(K, 0), seen(K, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= K) throw std::invalid_argument("group_accuracy: label out of range");
    ++seen[labels[i]];
    if (predictions[i] == labels[i]) ++correct[labels[i]];
  }
  GroupAccuracy acc;
  acc.per_class.resize(K);
  double group_sum[3] = {0, 0, 0};
  std::size_t group_n[3] = {0, 0, 0};
  for (std::size_t k = 0; k < K; ++k) {
    if (seen[k] == 0) throw std::invalid_argument("group_accuracy: class missing from test labels");
    acc.per_class[k] = static_cast<double>(correct[k]) / static_cast<double>(seen[k]);
    acc.all += acc.per_class[k];
    const std::size_t g = static_cast<std::size_t>(freq.group_of(k));
    group_sum[g] += acc.per_class[k];
    ++group_n[g];
  }
  acc.all /= static_cast<double>(K);
  acc.many = group_n[0] ? group_sum[0] / group_n[0] : 0.0;
  acc.medium = group_n[1] ? group_sum[1] / group_n[1] : 0.0;
  acc.few = group_n[2] ? group_sum[2] / group_n[2] : 0.0;
  return acc;
}

// Per class i, the mean predicted probability of class i over test samples
// whose true label is i. Closer to 1 is better.
inline std::vector<double> mean_positive_posterior(const Matrix& probabilities,
                                                   const std::vector<std::size_t>& labels,
                                                   std::size_t K) {
  if (probabilities.rows() != labels.size())
    throw std::invalid_argument("mean_positive_posterior: length mismatch");
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < K; ++j) s += probabilities(i, j);
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("mean_positive_posterior: rows must sum to 1");
  }
  std::vector<double> sum(K, 0.0);
  std::vector<std::size_t> n(K, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sum[labels[i]] += probabilities(i, labels[i]);
    ++n[labels[i]];
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (n[k] == 0) throw std::invalid_argument("mean_positive_posterior: class with no samples");
    sum[k] /= static_cast<double>(n[k]);
  }
  return sum;
}

struct RepresentationReport {
  double d_intra = 0.0;
  double d_inter = 0.0;
  double rho = 0.0;
  Matrix per_class_centers;  // [K x d]
};

// D_intra averages, per class, the pairwise L2 distances over ordered pairs
// including self-pairs (the 1/|R_i|^2 normalizer taken literally). D_inter
// averages center distances over ordered distinct class pairs.
inline RepresentationReport representation_quality(const Matrix& representations,
                                                   const std::vector<std::size_t>& labels,
                                                   std::size_t K) {
  if (representations.rows() != labels.size())
    throw std::invalid_argument("representation_quality: length mismatch");
  const std::size_t d = representations.cols();
  std::vector<std::vector<std::size_t>> by_class(K);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= K) throw std::invalid_argument("representation_quality: label out of range");
    by_class[labels[i]].push_back(i);
  }
  for (std::size_t k = 0; k < K; ++k)
    if (by_class[k].empty())
      throw std::invalid_argument("representation_quality: class with no samples");

  auto dist = [&](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = a[j] - b[j];
      s += diff * diff;
    }
    return std::sqrt(s);
  };

  RepresentationReport rep;
  rep.per_class_centers = Matrix(K, d);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i : by_class[k])
      for (std::size_t j = 0; j < d; ++j)
        rep.per_class_centers(k, j) += representations(i, j);
    for (std::size_t j = 0; j < d; ++j)
      rep.per_class_centers(k, j) /= static_cast<double>(by_class[k].size());

    double pair_sum = 0.0;
    for (std::size_t a : by_class[k])
      for (std::size_t b : by_class[k])
        pair_sum += dist(representations.data() + a * d, representations.data() + b * d);
    const double sz = static_cast<double>(by_class[k].size());
    rep.d_intra += pair_sum / (sz * sz);
  }
  rep.d_intra /= static_cast<double>(K);

  double inter_sum = 0.0;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j)
      if (i != j)
        inter_sum += dist(rep.per_class_centers.data() + i * d,
                          rep.per_class_centers.data() + j * d);
  rep.d_inter = inter_sum / static_cast<double>(K * (K - 1));
  if (rep.d_inter == 0.0)
    throw std::invalid_argument("representation_quality: coincident class centers");
  rep.rho = rep.d_intra / rep.d_inter;
  return rep;
}

// Plug-in MI estimate (nats) from empirical joint counts over two discrete
// sequences. Intended for small alphabets built in tests; continuous features
// must be quantized by the caller.
inline double plugin_mutual_information(const std::vector<std::size_t>& a,
                                        const std::vector<std::size_t>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("plugin_mutual_information: empty");
  if (a.size() != b.size())
    throw std::invalid_argument("plugin_mutual_information: length mismatch");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pxy = c / n;
    const double px = pa[key.first] / n;
    const double py = pb[key.second] / n;
    mi += pxy * std::log(pxy / (px * py));
  }
  return mi;
}

// Central-difference gradient oracle used across the test suite.
inline Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                         const Matrix& point, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_difference_gradient: h must be positive");
  Matrix grad(point.rows(), point.cols());
  Matrix x = point;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x.raw()[i];
    x.raw()[i] = orig + h;
    const double fp = f(x);
    x.raw()[i] = orig - h;
    const double fm = f(x);
    x.raw()[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::invalid_argument("finite_difference_gradient: non-finite evaluation");
    grad.raw()[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace bib
