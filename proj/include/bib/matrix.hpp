#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bib {

// Dense row-major double matrix. All batched quantities in the library
// (logits, activations, feature batches) use the [batch x features] layout.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard, so a seed reproduces the same
// stream on every platform. Value transforms below avoid the standard
// distributions, whose results are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller; one value per call, no caching, so the
  // stream position is a pure function of the call count.
  double normal() {
    double u1 = next_unit();
    while (u1 == 0.0) u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(next_unit() * static_cast<double>(n)) % n;
  }

  // Named substream: an independent Rng derived from this seed and a label.
  // Lets one experiment seed drive data synthesis, parameter init, and batch
  // shuffling without the streams interfering.
  Rng substream(std::string_view name) const {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    // splitmix64 finalizer over seed ^ name-hash
    std::uint64_t x = seed_ ^ h;
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    x = x ^ (x >> 31);
    return Rng(x);
  }

  void shuffle(std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace bib
