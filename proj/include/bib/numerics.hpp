#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "bib/matrix.hpp"

namespace bib {

inline void check_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw std::invalid_argument(std::string("non-finite ") + what);
}

inline double logsumexp(std::span<const double> row) {
  if (row.empty()) throw std::invalid_argument("logsumexp: empty row");
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - m);
  return m + std::log(s);
}

// Rowwise r - logsumexp(r). exp of each output row sums to 1.
inline Matrix log_softmax(const Matrix& logits) {
  check_finite(logits, "logits");
  if (logits.cols() == 0) throw std::invalid_argument("log_softmax: zero columns");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const std::span<const double> row{logits.data() + r * logits.cols(), logits.cols()};
    const double lse = logsumexp(row);
    for (std::size_t c = 0; c < logits.cols(); ++c) out(r, c) = row[c] - lse;
  }
  return out;
}

inline Matrix softmax(const Matrix& logits) {
  Matrix out = log_softmax(logits);
  for (double& v : out.raw()) v = std::exp(v);
  return out;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

// a^T * b, avoids materializing the transpose in backprop.
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_at_b: shape mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  return out;
}

// a * b^T
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_a_bt: shape mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  return out;
}

inline Matrix relu(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.raw()) v = std::max(v, 0.0);
  return out;
}

inline Matrix add_bias(const Matrix& x, std::span<const double> b) {
  if (x.cols() != b.size()) throw std::invalid_argument("add_bias: shape mismatch");
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) += b[c];
  return out;
}

inline Matrix random_uniform(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.raw()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace bib
