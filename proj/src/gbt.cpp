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

#include "cardrank/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cardrank/error.hpp"
#include "cardrank/split_search.hpp"

namespace cardrank {

void Dataset::add_row(std::span<const double> features, double target, double weight) {
  if (features.size() != width_) {
    throw DataError("row width " + std::to_string(features.size()) + " != dataset width " +
                    std::to_string(width_));
  }
  features_.insert(features_.end(), features.begin(), features.end());
  targets_.push_back(target);
  weights_.push_back(weight);
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < rows(); ++i) {
    if (!std::isfinite(targets_[i])) {
      throw DataError("non-finite target in row " + std::to_string(i));
    }
    if (!std::isfinite(weights_[i]) || weights_[i] < 0) {
      throw DataError("invalid instance weight in row " + std::to_string(i));
    }
    for (double v : row(i)) {
      if (!std::isfinite(v)) throw DataError("non-finite feature in row " + std::to_string(i));
    }
  }
}

int RegressionTree::leaf_index(std::span<const double> x) const {
  int at = 0;
  while (!nodes[at].is_leaf()) {
    const auto& n = nodes[at];
    at = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return at;
}

namespace {

void validate_config(const GbtConfig& c) {
  if (c.max_leaf_nodes < 2) throw DataError("max_leaf_nodes must be >= 2");
  if (c.num_trees < 0) throw DataError("num_trees must be >= 0");
  if (!(c.shrinkage > 0.0 && c.shrinkage <= 1.0)) {
    throw DataError("shrinkage must be in (0, 1]");
  }
  if (c.min_samples_per_leaf < 1) throw DataError("min_samples_per_leaf must be >= 1");
  if (!(c.feature_subsample > 0.0 && c.feature_subsample <= 1.0)) {
    throw DataError("feature_subsample must be in (0, 1]");
  }
}

// Grows one least-squares tree over presorted index arrays. Each open node
// owns the same [begin, end) range in every per-feature array and in
// `members_`, which stays in ascending sample order.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const GbtConfig& config,
              const std::vector<std::vector<std::size_t>>& presorted,
              std::span<const std::size_t> counts)
      : data_(data), config_(config), order_(presorted), counts_(counts) {
    members_.resize(data.rows());
    std::iota(members_.begin(), members_.end(), std::size_t{0});
    go_left_.resize(data.rows());
    scratch_.resize(data.rows());
  }

  RegressionTree build(std::span<const double> residuals,
                       std::span<const unsigned char> feature_mask,
                       std::vector<double>& predictions) {
    // order_ ranges are permuted in place during a build; restore per tree.
    reset();
    residuals_ = residuals;
    mask_ = feature_mask;

    RegressionTree tree;
    tree.nodes.push_back({});
    std::vector<Open> open;
    open.push_back(make_open(0, 0, data_.rows(), tree));
    tree.num_leaves = 1;

    while (tree.num_leaves < config_.max_leaf_nodes) {
      std::size_t pick = open.size();
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (open[i].split.feature < 0) continue;
        if (pick == open.size() || open[i].split.gain > open[pick].split.gain) pick = i;
      }
      if (pick == open.size()) break;
      const Open node = open[pick];
      open.erase(open.begin() + static_cast<long>(pick));

      const std::size_t mid = partition(node);
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      auto& parent = tree.nodes[node.node];
      parent.feature = node.split.feature;
      parent.threshold = node.split.threshold;
      parent.left = left;
      parent.right = left + 1;
      open.push_back(make_open(left, node.begin, mid, tree));
      open.push_back(make_open(left + 1, mid, node.end, tree));
      tree.num_leaves += 1;
    }

    for (const auto& leaf : open) {
      const double v = tree.nodes[leaf.node].value;
      for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
        predictions[members_[i]] += config_.shrinkage * v;
      }
    }
    return tree;
  }

 private:
  struct Open {
    int node = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    SplitCandidate split;
  };

  void reset() {
    if (!dirty_) return;
    work_ = order_;
    std::iota(members_.begin(), members_.end(), std::size_t{0});
    dirty_ = false;
  }

  Open make_open(int node, std::size_t begin, std::size_t end, RegressionTree& tree) {
    const auto& w = data_.weights();
    double sum = 0.0, weight = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t id = members_[i];
      sum += w[id] * residuals_[id];
      weight += w[id];
    }
    const double mean = weight > 0 ? sum / weight : 0.0;
    tree.nodes[node].value = mean;
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t id = members_[i];
      const double d = residuals_[id] - mean;
      ss += w[id] * d * d;
    }

    NodeSamples samples;
    samples.sorted.reserve(work_.size());
    for (const auto& arr : work_) {
      samples.sorted.emplace_back(arr.data() + begin, end - begin);
    }
    SplitSearchInput in;
    in.data = &data_;
    in.residuals = residuals_;
    in.feature_mask = mask_;
    in.counts = counts_;
    in.min_samples_per_leaf = config_.min_samples_per_leaf;
    // Gains below this are rounding noise (e.g. constant residuals).
    in.min_gain = 1e-9 * ss;
    Open open{node, begin, end, {}};
    open.split = config_.parallel_split_search ? find_best_split_parallel(in, samples)
                                               : find_best_split_serial(in, samples);
    return open;
  }

  // Stable partition of every array over the node range; returns the split
  // point between left and right children.
  std::size_t partition(const Open& node) {
    dirty_ = true;
    const int f = node.split.feature;
    const double t = node.split.threshold;
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t id = members_[i];
      go_left_[id] = data_.feature(id, static_cast<std::size_t>(f)) < t;
    }
    auto stable = [&](std::vector<std::size_t>& arr) {
      std::size_t l = node.begin, r = 0;
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t id = arr[i];
        if (go_left_[id]) {
          arr[l++] = id;
        } else {
          scratch_[r++] = id;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<long>(r),
                arr.begin() + static_cast<long>(l));
      return l;
    };
    const std::size_t mid = stable(members_);
    for (auto& arr : work_) stable(arr);
    return mid;
  }

  const Dataset& data_;
  const GbtConfig& config_;
  const std::vector<std::vector<std::size_t>>& order_;
  std::span<const std::size_t> counts_;
  std::vector<std::vector<std::size_t>> work_;
  std::vector<std::size_t> members_;
  std::vector<unsigned char> go_left_;
  std::vector<std::size_t> scratch_;
  std::span<const double> residuals_;
  std::span<const unsigned char> mask_;
  bool dirty_ = true;
};

// Rows with identical features always share a leaf, so under squared loss
// they can be merged into one row carrying their total weight and weighted
// mean target. Label-derived training sets are full of such duplicates.
struct Collapsed {
  Dataset data;
  std::vector<std::size_t> counts;
};

Collapsed collapse_duplicates(const Dataset& data) {
  std::map<std::vector<double>, std::size_t> groups;
  std::vector<std::size_t> first;
  std::vector<double> weight, weighted_target;
  Collapsed out{Dataset(data.width()), {}};
  const auto& y = data.targets();
  const auto& w = data.weights();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto row = data.row(i);
    auto [it, fresh] = groups.try_emplace(std::vector<double>(row.begin(), row.end()), first.size());
    if (fresh) {
      first.push_back(i);
      weight.push_back(0.0);
      weighted_target.push_back(0.0);
      out.counts.push_back(0);
    }
    const std::size_t g = it->second;
    weight[g] += w[i];
    weighted_target[g] += w[i] * y[i];
    out.counts[g] += 1;
  }
  for (std::size_t g = 0; g < first.size(); ++g) {
    double target = y[first[g]];
    if (out.counts[g] > 1) target = weight[g] > 0 ? weighted_target[g] / weight[g] : 0.0;
    out.data.add_row(data.row(first[g]), target, weight[g]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> presort(const Dataset& data) {
  std::vector<std::vector<std::size_t>> order(data.width());
  const long width = static_cast<long>(data.width());
#pragma omp parallel for schedule(dynamic)
  for (long f = 0; f < width; ++f) {
    auto& arr = order[f];
    arr.resize(data.rows());
    std::iota(arr.begin(), arr.end(), std::size_t{0});
    std::stable_sort(arr.begin(), arr.end(), [&](std::size_t a, std::size_t b) {
      return data.feature(a, f) < data.feature(b, f);
    });
  }
  return order;
}

}  // namespace

GbtModel fit_gbt(const Dataset& data, const GbtConfig& config) {
  validate_config(config);
  if (data.rows() == 0) throw DataError("fit_gbt: empty dataset");
  if (data.width() == 0) throw DataError("fit_gbt: zero-width dataset");
  data.validate();

  const auto& y = data.targets();
  const auto& w = data.weights();
  double sum = 0.0, weight = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    sum += w[i] * y[i];
    weight += w[i];
  }
  if (!(weight > 0)) throw DataError("fit_gbt: total instance weight is zero");

  GbtModel model;
  model.initial_estimate = sum / weight;
  model.shrinkage = config.shrinkage;
  model.num_features = data.width();
  model.config = config;

  const Collapsed collapsed = collapse_duplicates(data);
  const Dataset& rows = collapsed.data;
  std::vector<double> predictions(rows.rows(), model.initial_estimate);
  std::vector<double> residuals(rows.rows());
  const auto order = presort(rows);
  TreeBuilder builder(rows, config, order, collapsed.counts);

  std::mt19937_64 rng(config.seed);
  std::vector<unsigned char> mask;
  std::vector<std::size_t> features(data.width());
  std::iota(features.begin(), features.end(), std::size_t{0});
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(config.feature_subsample *
                                              static_cast<double>(data.width()))));

  const auto& targets = rows.targets();
  for (int k = 0; k < config.num_trees; ++k) {
    for (std::size_t i = 0; i < rows.rows(); ++i) residuals[i] = targets[i] - predictions[i];
    mask.clear();
    if (keep < data.width()) {
      std::shuffle(features.begin(), features.end(), rng);
      mask.assign(data.width(), 0);
      for (std::size_t j = 0; j < keep; ++j) mask[features[j]] = 1;
    }
    model.trees.push_back(builder.build(residuals, mask, predictions));
    model.tree_weights.push_back(1.0);
  }
  return model;
}

double predict_gbt(const GbtModel& model, std::span<const double> features) {
  if (features.size() != model.num_features) {
    throw DataError("predict_gbt: feature width " + std::to_string(features.size()) +
                    " != model width " + std::to_string(model.num_features));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < model.trees.size(); ++k) {
    sum += model.tree_weights[k] * model.trees[k].predict(features);
  }
  return model.initial_estimate + model.shrinkage * sum;
}

std::vector<double> staged_training_mse(const GbtModel& model, const Dataset& data) {
  std::vector<double> pred(data.rows(), model.initial_estimate);
  std::vector<double> out;
  const auto& y = data.targets();
  const auto& w = data.weights();
  auto mse = [&] {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      const double d = y[i] - pred[i];
      num += w[i] * d * d;
      den += w[i];
    }
    return den > 0 ? num / den : 0.0;
  };
  out.push_back(mse());
  for (std::size_t k = 0; k < model.trees.size(); ++k) {
    for (std::size_t i = 0; i < data.rows(); ++i) {
      pred[i] += model.shrinkage * model.tree_weights[k] * model.trees[k].predict(data.row(i));
    }
    out.push_back(mse());
  }
  return out;
}

std::string serialize_gbt(const GbtModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "cardrank-gbt";
  j["version"] = 1;
  j["config"] = {{"num_trees", m.config.num_trees},
                 {"max_leaf_nodes", m.config.max_leaf_nodes},
                 {"shrinkage", m.config.shrinkage},
                 {"min_samples_per_leaf", m.config.min_samples_per_leaf},
                 {"feature_subsample", m.config.feature_subsample},
                 {"seed", m.config.seed}};
  j["loss"] = m.loss;
  j["num_features"] = m.num_features;
  j["initial_estimate"] = m.initial_estimate;
  j["shrinkage"] = m.shrinkage;
  auto& trees = j["trees"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < m.trees.size(); ++k) {
    const auto& t = m.trees[k];
    nlohmann::ordered_json tj;
    tj["weight"] = m.tree_weights[k];
    tj["num_leaves"] = t.num_leaves;
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    tj["feature"] = feature;
    tj["threshold"] = threshold;
    tj["left"] = left;
    tj["right"] = right;
    tj["value"] = value;
    trees.push_back(std::move(tj));
  }
  return j.dump();
}

GbtModel parse_gbt(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "cardrank-gbt") {
      throw DataError("not a cardrank-gbt model");
    }
    if (j.at("version").get<int>() != 1) throw DataError("unsupported model version");
    GbtModel m;
    const auto& c = j.at("config");
    m.config.num_trees = c.at("num_trees");
    m.config.max_leaf_nodes = c.at("max_leaf_nodes");
    m.config.shrinkage = c.at("shrinkage");
    m.config.min_samples_per_leaf = c.at("min_samples_per_leaf");
    m.config.feature_subsample = c.at("feature_subsample");
    m.config.seed = c.at("seed");
    m.loss = j.at("loss");
    if (m.loss != "squared") throw DataError("unsupported loss '" + m.loss + "'");
    m.num_features = j.at("num_features");
    m.initial_estimate = j.at("initial_estimate");
    m.shrinkage = j.at("shrinkage");
    for (const auto& tj : j.at("trees")) {
      RegressionTree t;
      t.num_leaves = tj.at("num_leaves");
      const auto feature = tj.at("feature").get<std::vector<int>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto left = tj.at("left").get<std::vector<int>>();
      const auto right = tj.at("right").get<std::vector<int>>();
      const auto value = tj.at("value").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n ||
          value.size() != n || n == 0) {
        throw DataError("malformed tree arrays");
      }
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode node{feature[i], threshold[i], left[i], right[i], value[i]};
        if (!node.is_leaf()) {
          const auto bad = [&](int c) { return c <= static_cast<int>(i) || c >= static_cast<int>(n); };
          if (bad(node.left) || bad(node.right) ||
              node.feature >= static_cast<int>(m.num_features)) {
            throw DataError("malformed tree node " + std::to_string(i));
          }
        }
        t.nodes.push_back(node);
      }
      m.trees.push_back(std::move(t));
      m.tree_weights.push_back(tj.at("weight").get<double>());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

}  // namespace cardrank
