#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bib/matrix.hpp"
#include "bib/numerics.hpp"

namespace bib {

enum class ClassGroup { Many, Medium, Few };

inline const char* group_name(ClassGroup g) {
  switch (g) {
    case ClassGroup::Many: return "many";
    case ClassGroup::Medium: return "medium";
    default: return "few";
  }
}

// Per-class training counts n_i plus the quantities every re-balancing
// component derives from them.
struct ClassFrequencyTable {
  std::vector<std::size_t> counts;
  std::size_t many_threshold = 100;  // Many: n_i > many_threshold
  std::size_t few_threshold = 20;    // Few:  n_i < few_threshold

  std::size_t num_classes() const { return counts.size(); }

  std::size_t total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  }

  std::size_t max_count() const { return *std::max_element(counts.begin(), counts.end()); }
  std::size_t min_count() const { return *std::min_element(counts.begin(), counts.end()); }

  double imbalance_factor() const {
    return static_cast<double>(max_count()) / static_cast<double>(min_count());
  }

  ClassGroup group_of(std::size_t k) const {
    if (counts[k] > many_threshold) return ClassGroup::Many;
    if (counts[k] < few_threshold) return ClassGroup::Few;
    return ClassGroup::Medium;
  }

  std::vector<double> log_counts() const {
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) throw std::invalid_argument("empty class");
      out[i] = std::log(static_cast<double>(counts[i]));
    }
    return out;
  }
};

struct Dataset {
  Matrix features;                 // [N x d]
  std::vector<std::size_t> labels; // values in [0, K)
  ClassFrequencyTable frequency_table;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  std::size_t num_classes() const { return frequency_table.num_classes(); }
};

// n_k = round(n_max * IF^(-(k-1)/(K-1))), the standard exponential long-tail
// profile. IF = 1 gives a balanced table.
inline ClassFrequencyTable exponential_profile(std::size_t K, std::size_t n_max,
                                               double imbalance_factor) {
  if (K < 2) throw std::invalid_argument("exponential_profile: K must be >= 2");
  if (n_max < 1) throw std::invalid_argument("exponential_profile: n_max must be >= 1");
  if (imbalance_factor < 1.0)
    throw std::invalid_argument("exponential_profile: imbalance factor must be >= 1");
  ClassFrequencyTable table;
  table.counts.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double exponent = -static_cast<double>(k) / static_cast<double>(K - 1);
    const double n = static_cast<double>(n_max) * std::pow(imbalance_factor, exponent);
    table.counts[k] = static_cast<std::size_t>(std::llround(n));
    if (table.counts[k] == 0) table.counts[k] = 1;
  }
  return table;
}

namespace detail {

inline std::vector<std::vector<double>> class_centers(std::size_t K, std::size_t dim,
                                                      double separation, Rng& rng) {
  std::vector<std::vector<double>> centers(K, std::vector<double>(dim));
  for (auto& c : centers) {
    double norm = 0.0;
    for (double& v : c) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : c) v = separation * v / norm;
  }
  return centers;
}

}  // namespace detail

// Isotropic unit-variance Gaussians at separation * mu_k, mu_k unit vectors
// drawn once from the seeded stream. Train follows the frequency table, test
// is class-balanced.
inline std::pair<Dataset, Dataset> synthesize_gaussian(const ClassFrequencyTable& freq,
                                                       std::size_t dim, double separation,
                                                       std::size_t test_per_class, Rng& rng) {
  if (dim < 2) throw std::invalid_argument("synthesize_gaussian: dim must be >= 2");
  if (separation < 0.0) throw std::invalid_argument("synthesize_gaussian: negative separation");
  const std::size_t K = freq.num_classes();
  const auto centers = detail::class_centers(K, dim, separation, rng);

  auto fill = [&](Dataset& ds, const std::vector<std::size_t>& per_class) {
    std::size_t n = std::accumulate(per_class.begin(), per_class.end(), std::size_t{0});
    ds.features = Matrix(n, dim);
    ds.labels.resize(n);
    std::size_t row = 0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < per_class[k]; ++i, ++row) {
        ds.labels[row] = k;
        for (std::size_t j = 0; j < dim; ++j)
          ds.features(row, j) = centers[k][j] + rng.normal();
      }
  };

  Dataset train, test;
  train.frequency_table = freq;
  fill(train, freq.counts);
  test.frequency_table = freq;  // groups are defined by training counts
  fill(test, std::vector<std::size_t>(K, test_per_class));
  return {std::move(train), std::move(test)};
}

// CSV rows: label,f1,...,fd (no header). Frequency table recomputed from the
// labels in the file.
inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::vector<std::size_t> labels;
  std::vector<double> values;
  std::size_t dim = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(field, &pos);
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: non-numeric field at line " +
                                 std::to_string(line_no));
      }
      if (pos != field.size())
        throw std::runtime_error("load_csv: non-numeric field at line " +
                                 std::to_string(line_no));
      row.push_back(v);
    }
    if (row.size() < 2)
      throw std::runtime_error("load_csv: too few fields at line " + std::to_string(line_no));
    if (dim == 0)
      dim = row.size() - 1;
    else if (row.size() - 1 != dim)
      throw std::runtime_error("load_csv: ragged row at line " + std::to_string(line_no));
    if (row[0] < 0.0 || row[0] != std::floor(row[0]))
      throw std::runtime_error("load_csv: bad label at line " + std::to_string(line_no));
    labels.push_back(static_cast<std::size_t>(row[0]));
    values.insert(values.end(), row.begin() + 1, row.end());
  }
  if (labels.empty()) throw std::runtime_error("load_csv: empty file " + path);

  Dataset ds;
  ds.features = Matrix(labels.size(), dim);
  std::copy(values.begin(), values.end(), ds.features.data());
  ds.labels = std::move(labels);
  const std::size_t K = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  ds.frequency_table.counts.assign(K, 0);
  for (std::size_t l : ds.labels) ++ds.frequency_table.counts[l];
  return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

// Seeded epoch permutation over all instances; final partial batch included.
class BatchIterator {
 public:
  BatchIterator(const Dataset& data, std::size_t batch_size, Rng& rng)
      : data_(&data), batch_size_(batch_size), order_(data.size()) {
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng.shuffle(order_);
  }

  bool next(Matrix& features, std::vector<std::size_t>& labels) {
    if (pos_ >= order_.size()) return false;
    const std::size_t n = std::min(batch_size_, order_.size() - pos_);
    features = Matrix(n, data_->dim());
    labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = order_[pos_ + i];
      labels[i] = data_->labels[src];
      for (std::size_t j = 0; j < data_->dim(); ++j)
        features(i, j) = data_->features(src, j);
    }
    pos_ += n;
    return true;
  }

  const std::vector<std::size_t>& order() const { return order_; }

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace bib
