#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bib/losses.hpp"
#include "bib/matrix.hpp"

namespace testutil {

inline bib::Matrix random_logits(std::size_t rows, std::size_t cols, bib::Rng& rng,
                                 double scale = 2.0) {
  bib::Matrix m(rows, cols);
  for (double& v : m.raw()) v = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<std::size_t> random_labels(std::size_t n, std::size_t K, bib::Rng& rng) {
  std::vector<std::size_t> labels(n);
  for (auto& l : labels) l = rng.index(K);
  return labels;
}

inline std::vector<std::size_t> random_counts(std::size_t K, bib::Rng& rng,
                                              std::size_t max_count = 200) {
  std::vector<std::size_t> counts(K);
  for (auto& c : counts) c = 1 + rng.index(max_count);
  return counts;
}

// ||a - b||_inf / max(||b||_inf, floor)
inline double relative_error(const bib::Matrix& a, const bib::Matrix& b, double floor = 1e-12) {
  double diff = 0.0, ref = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a.raw()[i] - b.raw()[i]));
    ref = std::max(ref, std::abs(b.raw()[i]));
  }
  return diff / ref;
}

// Objective value of the mbib composition with every distillation teacher
// frozen at `frozen_taps`. Differentiating this in the live arguments yields
// the gradients mbib_loss reports, since the teacher side of each edge is
// detached; use it as the finite-difference oracle.
inline double mbib_detached_value(const std::vector<bib::Matrix>& taps, const bib::Matrix& z,
                                  const std::vector<bib::Matrix>& frozen_taps,
                                  const std::vector<std::size_t>& labels,
                                  const std::vector<std::size_t>& counts,
                                  const bib::MbibConfig& config) {
  const std::size_t L = taps.size();
  const auto edges = bib::detail::mbib_edges(L, config.tap_coefficients, config.topology);
  std::vector<double> weight(L + 1, 0.0);
  for (const auto& [t, s, c] : edges) {
    weight[t] += c;
    weight[s] += c;
  }
  if (config.dedupe_student_bsc && weight[L] > 1.0) weight[L] = 1.0;
  auto node = [&](std::size_t i) -> const bib::Matrix& { return i < L ? taps[i] : z; };
  double value = 0.0;
  for (std::size_t i = 0; i <= L; ++i)
    if (weight[i] != 0.0)
      value += weight[i] *
               bib::bsc_loss(node(i), labels, config.bib.rebalance, counts,
                             config.bib.reduction)
                   .value;
  for (const auto& [t, s, c] : edges)
    if (c != 0.0 && config.bib.beta != 0.0)
      value += c * config.bib.beta *
               bib::vsd_loss(frozen_taps[t], node(s), config.bib.rebalance, counts).value;
  return value;
}

// Same, for the two-branch special case: the vsd teacher is frozen at
// `frozen_t` while the bsc teacher input stays live.
inline double bib_detached_value(const bib::Matrix& t, const bib::Matrix& s,
                                 const bib::Matrix& frozen_t,
                                 const std::vector<std::size_t>& labels,
                                 const std::vector<std::size_t>& counts,
                                 const bib::BibLossConfig& config) {
  double value = bib::bsc_loss(t, labels, config.rebalance, counts, config.reduction).value +
                 bib::bsc_loss(s, labels, config.rebalance, counts, config.reduction).value;
  if (config.beta != 0.0)
    value += config.beta * bib::vsd_loss(frozen_t, s, config.rebalance, counts).value;
  return value;
}

inline double max_abs(const bib::Matrix& m) {
  double r = 0.0;
  for (double v : m.raw()) r = std::max(r, std::abs(v));
  return r;
}

}  // namespace testutil
