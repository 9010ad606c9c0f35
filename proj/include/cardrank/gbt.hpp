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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cardrank {

// Row-major design matrix with per-row targets and instance weights.
class Dataset {
 public:
  explicit Dataset(std::size_t width = 0) : width_(width) {}

  void add_row(std::span<const double> features, double target, double weight = 1.0);

  std::size_t width() const { return width_; }
  std::size_t rows() const { return targets_.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * width_, width_};
  }
  double feature(std::size_t i, std::size_t f) const { return features_[i * width_ + f]; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& mutable_weights() { return weights_; }

  // Throws DataError on non-finite values or negative weights.
  void validate() const;

 private:
  std::size_t width_;
  std::vector<double> features_;
  std::vector<double> targets_;
  std::vector<double> weights_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf value; for internal nodes the pre-split mean

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int num_leaves = 0;

  // Routes left when x[feature] < threshold.
  int leaf_index(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }
};

struct GbtConfig {
  int num_trees = 67;
  int max_leaf_nodes = 10;
  double shrinkage = 0.1;
  int min_samples_per_leaf = 20;
  double feature_subsample = 1.0;
  std::uint64_t seed = 0;
  bool parallel_split_search = true;
};

struct GbtModel {
  double initial_estimate = 0.0;
  std::vector<RegressionTree> trees;
  std::vector<double> tree_weights;
  double shrinkage = 0.1;
  std::string loss = "squared";
  std::size_t num_features = 0;
  GbtConfig config;
};

// Least-squares boosting: every tree fits the current residuals, grown
// best-first up to max_leaf_nodes leaves with exact greedy split search.
GbtModel fit_gbt(const Dataset& data, const GbtConfig& config = {});

double predict_gbt(const GbtModel& model, std::span<const double> features);

// Weighted training MSE after 0, 1, ..., K trees.
std::vector<double> staged_training_mse(const GbtModel& model, const Dataset& data);

std::string serialize_gbt(const GbtModel& model);
GbtModel parse_gbt(const std::string& json_text);

}  // namespace cardrank
