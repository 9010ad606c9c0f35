// Copyright 2026 The cardrank Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "cardrank/error.hpp"
#include "cardrank/gbt.hpp"
#include "cardrank/split_search.hpp"

namespace cardrank {
namespace {

Dataset square_dataset(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d(1);
  for (int i = 0; i < n; ++i) {
    const double x = u(rng);
    d.add_row(std::vector<double>{x}, x * x);
  }
  return d;
}

Dataset noisy_dataset(int n, int width, unsigned seed, bool integer_features) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> level(0, 3);
  Dataset d(static_cast<std::size_t>(width));
  std::vector<double> x(static_cast<std::size_t>(width));
  for (int i = 0; i < n; ++i) {
    for (auto& v : x) v = integer_features ? level(rng) : normal(rng);
    const double y = std::sin(x[0]) + 0.5 * x[1 % width] * x[width - 1] + 0.3 * normal(rng);
    d.add_row(x, y);
  }
  return d;
}

TEST(Gbt, TrainingLossNeverIncreases) {
  const std::vector<Dataset> sets = {square_dataset(500, 1), noisy_dataset(800, 4, 2, false),
                                     noisy_dataset(1500, 6, 3, true)};
  for (const auto& d : sets) {
    const auto model = fit_gbt(d);
    ASSERT_EQ(model.trees.size(), 67u);
    const auto mse = staged_training_mse(model, d);
    ASSERT_EQ(mse.size(), 68u);
    for (std::size_t k = 1; k < mse.size(); ++k) EXPECT_LE(mse[k], mse[k - 1]) << "tree " << k;
  }
}

TEST(Gbt, FitsASquareClosely) {
  const auto d = square_dataset(1000, 7);
  const auto model = fit_gbt(d);
  EXPECT_LT(staged_training_mse(model, d).back(), 1e-3);
}

// Replays training: residuals against the running prediction, samples routed
// through each tree, leaf values compared with the mean residual of its samples.
TEST(Gbt, LeafValueIsTheMeanResidualOfItsSamples) {
  const auto d = noisy_dataset(600, 3, 11, false);
  GbtConfig config;
  config.num_trees = 20;
  config.min_samples_per_leaf = 5;
  const auto model = fit_gbt(d, config);
  std::vector<double> pred(d.rows(), model.initial_estimate);
  for (const auto& tree : model.trees) {
    std::map<int, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      auto& a = acc[tree.leaf_index(d.row(i))];
      a.first += d.targets()[i] - pred[i];
      a.second += 1;
    }
    EXPECT_EQ(static_cast<int>(acc.size()), tree.num_leaves);
    for (const auto& [leaf, a] : acc) {
      EXPECT_TRUE(tree.nodes[leaf].is_leaf());
      EXPECT_EQ(tree.nodes[leaf].value, a.first / a.second);
      EXPECT_GE(a.second, config.min_samples_per_leaf);
    }
    for (std::size_t i = 0; i < d.rows(); ++i) {
      pred[i] += model.shrinkage * tree.predict(d.row(i));
    }
  }
}

TEST(Gbt, RespectsLeafBudget) {
  const auto d = noisy_dataset(2000, 5, 12, false);
  GbtConfig config;
  config.num_trees = 5;
  config.max_leaf_nodes = 4;
  for (const auto& t : fit_gbt(d, config).trees) {
    EXPECT_LE(t.num_leaves, 4);
    EXPECT_EQ(t.nodes.size(), static_cast<std::size_t>(2 * t.num_leaves - 1));
  }
}

TEST(Gbt, DuplicateRowsBehaveLikeTheirMultiset) {
  // Integer features repeat heavily. Fitting the data and the same data with
  // each duplicate group pre-merged by weight must give the same predictions.
  const auto d = noisy_dataset(3000, 3, 13, true);
  std::map<std::vector<double>, std::pair<double, double>> groups;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    auto& g = groups[{d.row(i).begin(), d.row(i).end()}];
    g.first += d.targets()[i];
    g.second += 1;
  }
  Dataset merged(3);
  for (const auto& [x, g] : groups) merged.add_row(x, g.first / g.second, g.second);
  GbtConfig config;
  config.min_samples_per_leaf = 1;
  const auto a = fit_gbt(d, config);
  const auto b = fit_gbt(merged, config);
  for (const auto& [x, g] : groups) {
    EXPECT_NEAR(predict_gbt(a, x), predict_gbt(b, x), 1e-9);
  }
}

TEST(Gbt, MinimumLeafSizeCountsOriginalRows) {
  Dataset d(1);
  for (int i = 0; i < 30; ++i) d.add_row(std::vector<double>{i < 25 ? 0.0 : 1.0}, i < 25 ? 0 : 5);
  GbtConfig config;
  config.num_trees = 1;
  config.min_samples_per_leaf = 6;
  EXPECT_EQ(fit_gbt(d, config).trees[0].num_leaves, 1);
  config.min_samples_per_leaf = 5;
  EXPECT_EQ(fit_gbt(d, config).trees[0].num_leaves, 2);
}

TEST(Gbt, SerialAndParallelSplitSearchBuildTheSameModel) {
  const auto d = noisy_dataset(3000, 8, 14, false);
  GbtConfig serial;
  serial.parallel_split_search = false;
  GbtConfig parallel;
  EXPECT_EQ(serialize_gbt(fit_gbt(d, serial)), serialize_gbt(fit_gbt(d, parallel)));
}

TEST(Gbt, FeatureSubsamplingIsSeeded) {
  const auto d = noisy_dataset(500, 6, 15, false);
  GbtConfig config;
  config.feature_subsample = 0.5;
  config.seed = 4;
  EXPECT_EQ(serialize_gbt(fit_gbt(d, config)), serialize_gbt(fit_gbt(d, config)));
}

TEST(Gbt, SerializationRoundTripsPredictions) {
  const auto d = noisy_dataset(400, 3, 16, false);
  const auto model = fit_gbt(d);
  const auto text = serialize_gbt(model);
  const auto back = parse_gbt(text);
  EXPECT_EQ(serialize_gbt(back), text);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    EXPECT_EQ(predict_gbt(back, d.row(i)), predict_gbt(model, d.row(i)));
  }
  EXPECT_THROW(parse_gbt("{}"), DataError);
  EXPECT_THROW(predict_gbt(model, std::vector<double>{1.0}), DataError);
}

TEST(Gbt, RejectsBadInput) {
  Dataset empty(2);
  EXPECT_THROW(fit_gbt(empty), DataError);
  Dataset d(1);
  d.add_row(std::vector<double>{NAN}, 1.0);
  EXPECT_THROW(fit_gbt(d), DataError);
  EXPECT_THROW(d.add_row(std::vector<double>{1.0, 2.0}, 0.0), DataError);
  Dataset ok(1);
  ok.add_row(std::vector<double>{1.0}, 1.0);
  GbtConfig bad;
  bad.shrinkage = 0.0;
  EXPECT_THROW(fit_gbt(ok, bad), DataError);
  bad = {};
  bad.max_leaf_nodes = 1;
  EXPECT_THROW(fit_gbt(ok, bad), DataError);
}

// Exhaustive split oracle: every threshold between consecutive distinct
// values, scored by the drop in squared error.
double brute_force_gain(const Dataset& d, const std::vector<double>& r, int f, int min_leaf) {
  double best = 0.0;
  std::vector<double> values;
  for (std::size_t i = 0; i < d.rows(); ++i) values.push_back(d.feature(i, f));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  auto sse = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  std::vector<double> all(r.begin(), r.end());
  const double parent = sse(all);
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double t = (values[k - 1] + values[k]) / 2;
    std::vector<double> left, right;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      (d.feature(i, f) < t ? left : right).push_back(r[i]);
    }
    if (static_cast<int>(left.size()) < min_leaf || static_cast<int>(right.size()) < min_leaf) {
      continue;
    }
    best = std::max(best, parent - sse(left) - sse(right));
  }
  return best;
}

TEST(SplitSearch, MatchesExhaustiveOracleAndAgreesAcrossKernels) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto d = noisy_dataset(300, 4, 100 + seed, seed % 2 == 0);
    std::vector<double> r(d.targets().begin(), d.targets().end());
    std::vector<std::vector<std::size_t>> order(4);
    for (int f = 0; f < 4; ++f) {
      order[f].resize(d.rows());
      std::iota(order[f].begin(), order[f].end(), std::size_t{0});
      std::stable_sort(order[f].begin(), order[f].end(), [&](auto a, auto b) {
        return d.feature(a, f) < d.feature(b, f);
      });
    }
    NodeSamples node;
    for (const auto& o : order) node.sorted.emplace_back(o);
    SplitSearchInput in;
    in.data = &d;
    in.residuals = r;
    in.min_samples_per_leaf = 7;
    double best = 0.0;
    for (int f = 0; f < 4; ++f) {
      const auto c = best_split_for_feature(in, order[f], f);
      const double oracle = brute_force_gain(d, r, f, 7);
      EXPECT_NEAR(c.gain, oracle, 1e-9 * std::max(1.0, oracle));
      best = std::max(best, oracle);
    }
    const auto serial = find_best_split_serial(in, node);
    const auto parallel = find_best_split_parallel(in, node);
    EXPECT_NEAR(serial.gain, best, 1e-9 * std::max(1.0, best));
    EXPECT_EQ(serial.feature, parallel.feature);
    EXPECT_EQ(serial.threshold, parallel.threshold);
    EXPECT_EQ(serial.gain, parallel.gain);
  }
}

}  // namespace
}  // namespace cardrank
