#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <map>

#include "bib/data.hpp"
#include "helpers.hpp"

using bib::ClassFrequencyTable;
using bib::Dataset;
using bib::Matrix;
using bib::Rng;

TEST_CASE("exponential_profile endpoints and formula") {
  auto t = bib::exponential_profile(2, 100, 100.0);
  CHECK(t.counts == std::vector<std::size_t>{100, 1});

  t = bib::exponential_profile(3, 100, 100.0);
  CHECK(t.counts == std::vector<std::size_t>{100, 10, 1});  // 100 * 100^(-1/2) = 10
  CHECK(t.imbalance_factor() == doctest::Approx(100.0));

  t = bib::exponential_profile(5, 64, 1.0);
  for (std::size_t c : t.counts) CHECK(c == 64);

  CHECK_THROWS_AS(bib::exponential_profile(3, 100, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(bib::exponential_profile(1, 100, 10.0), std::invalid_argument);
}

TEST_CASE("exponential_profile is monotone nonincreasing") {
  const auto t = bib::exponential_profile(10, 800, 100.0);
  for (std::size_t k = 1; k < t.counts.size(); ++k) CHECK(t.counts[k] <= t.counts[k - 1]);
  CHECK(t.counts.front() == 800);
  CHECK(t.counts.back() == 8);
}

TEST_CASE("group assignment thresholds") {
  ClassFrequencyTable t;
  t.counts = {150, 100, 50, 20, 19};
  t.many_threshold = 100;
  t.few_threshold = 20;
  CHECK(t.group_of(0) == bib::ClassGroup::Many);
  CHECK(t.group_of(1) == bib::ClassGroup::Medium);  // n > 100 is strict
  CHECK(t.group_of(2) == bib::ClassGroup::Medium);
  CHECK(t.group_of(3) == bib::ClassGroup::Medium);  // n < 20 is strict
  CHECK(t.group_of(4) == bib::ClassGroup::Few);
}

TEST_CASE("synthesize_gaussian determinism and counts") {
  const auto freq = bib::exponential_profile(4, 50, 10.0);
  Rng r1(123), r2(123);
  auto [train1, test1] = bib::synthesize_gaussian(freq, 3, 2.0, 20, r1);
  auto [train2, test2] = bib::synthesize_gaussian(freq, 3, 2.0, 20, r2);
  CHECK(train1.features == train2.features);
  CHECK(train1.labels == train2.labels);
  CHECK(test1.features == test2.features);
  CHECK(train1.size() == freq.total());
  CHECK(test1.size() == 4 * 20);
  std::vector<std::size_t> seen(4, 0);
  for (std::size_t l : train1.labels) ++seen[l];
  CHECK(seen == freq.counts);
}

TEST_CASE("well-separated classes are recovered by a nearest-centroid oracle") {
  const auto freq = bib::exponential_profile(2, 100, 4.0);
  Rng rng(7);
  auto [train, test] = bib::synthesize_gaussian(freq, 2, 10.0, 100, rng);

  // centroid oracle fitted on train
  std::vector<std::vector<double>> centroid(2, std::vector<double>(2, 0.0));
  std::vector<std::size_t> n(2, 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    ++n[train.labels[i]];
    for (std::size_t j = 0; j < 2; ++j) centroid[train.labels[i]][j] += train.features(i, j);
  }
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 2; ++j) centroid[k][j] /= static_cast<double>(n[k]);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      d0 += std::pow(test.features(i, j) - centroid[0][j], 2);
      d1 += std::pow(test.features(i, j) - centroid[1][j], 2);
    }
    if ((d0 <= d1 ? 0u : 1u) == test.labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(test.size()) >= 0.99);
}

TEST_CASE("zero separation carries no signal") {
  const auto freq = bib::exponential_profile(4, 60, 6.0);
  Rng rng(21);
  auto [train, test] = bib::synthesize_gaussian(freq, 3, 0.0, 200, rng);
  // predicting the head class gives balanced accuracy 1/K; a majority vote on
  // the nearest train point cannot beat chance by more than 3 sigma binomial
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (test.labels[i] == 0) ++correct;  // constant classifier
  const double acc = static_cast<double>(correct) / static_cast<double>(test.size());
  const double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(test.size()));
  CHECK(std::abs(acc - 0.25) <= 3.0 * sigma);
}

TEST_CASE("csv round trip") {
  const auto freq = bib::exponential_profile(3, 20, 5.0);
  Rng rng(3);
  auto [train, test] = bib::synthesize_gaussian(freq, 4, 1.5, 5, rng);
  const std::string path = (std::filesystem::temp_directory_path() / "bib_data_rt.csv").string();
  bib::save_csv(train, path);
  const Dataset loaded = bib::load_csv(path);
  REQUIRE(loaded.size() == train.size());
  CHECK(loaded.labels == train.labels);
  for (std::size_t i = 0; i < train.features.size(); ++i)
    CHECK(std::abs(loaded.features.raw()[i] - train.features.raw()[i]) < 1e-9);
  CHECK(loaded.frequency_table.counts == freq.counts);
  std::remove(path.c_str());
}

TEST_CASE("csv parse errors name the line") {
  const std::string path = (std::filesystem::temp_directory_path() / "bib_bad.csv").string();
  {
    std::ofstream out(path);
    out << "0,1.0,2.0\n0,3.0\n";
  }
  CHECK_THROWS_WITH_AS(bib::load_csv(path), "load_csv: ragged row at line 2", std::runtime_error);
  {
    std::ofstream out(path);
    out << "0,1.0,oops\n";
  }
  CHECK_THROWS_WITH_AS(bib::load_csv(path), "load_csv: non-numeric field at line 1",
                       std::runtime_error);
  {
    std::ofstream out(path);
  }
  CHECK_THROWS_AS(bib::load_csv(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("csv label counting") {
  const std::string path = (std::filesystem::temp_directory_path() / "bib_counts.csv").string();
  {
    std::ofstream out(path);
    out << "0,1.0\n0,2.0\n1,3.0\n";
  }
  const Dataset ds = bib::load_csv(path);
  CHECK(ds.frequency_table.counts == std::vector<std::size_t>{2, 1});
  std::remove(path.c_str());
}

TEST_CASE("batch iterator covers the dataset exactly once per epoch") {
  const auto freq = bib::exponential_profile(3, 10, 2.0);
  Rng rng(5);
  auto [train, test] = bib::synthesize_gaussian(freq, 2, 1.0, 2, rng);

  Rng batch_rng(17);
  bib::BatchIterator it(train, 7, batch_rng);
  Matrix feats;
  std::vector<std::size_t> labels;
  std::map<std::size_t, std::size_t> label_multiset;
  std::size_t total = 0;
  while (it.next(feats, labels)) {
    CHECK(feats.rows() == labels.size());
    total += labels.size();
    for (std::size_t l : labels) ++label_multiset[l];
  }
  CHECK(total == train.size());
  for (std::size_t k = 0; k < 3; ++k) CHECK(label_multiset[k] == freq.counts[k]);

  // same stream, next epoch: different permutation, same multiset
  bib::BatchIterator it2(train, 7, batch_rng);
  CHECK(it.order() != it2.order());

  // batch_size = N gives one batch with everything
  Rng one_rng(2);
  bib::BatchIterator whole(train, train.size(), one_rng);
  CHECK(whole.next(feats, labels));
  CHECK(labels.size() == train.size());
  CHECK_FALSE(whole.next(feats, labels));
}
