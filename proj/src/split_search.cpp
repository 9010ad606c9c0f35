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

#include "cardrank/split_search.hpp"

#include <omp.h>

namespace cardrank {

SplitCandidate best_split_for_feature(const SplitSearchInput& in,
                                      std::span<const std::size_t> sorted, int feature) {
  SplitCandidate best;
  const std::size_t n = sorted.size();
  const auto min_leaf = static_cast<std::size_t>(in.min_samples_per_leaf);
  auto count = [&](std::size_t id) { return in.counts.empty() ? 1 : in.counts[id]; };

  const auto& w = in.data->weights();
  double sum = 0.0, weight = 0.0;
  std::size_t total = 0;
  for (std::size_t id : sorted) {
    sum += w[id] * in.residuals[id];
    weight += w[id];
    total += count(id);
  }
  if (n < 2 || total < 2 * min_leaf) return best;
  const double parent = weight > 0 ? sum * sum / weight : 0.0;

  double left_sum = 0.0, left_weight = 0.0;
  std::size_t left = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t prev = sorted[i - 1];
    left_sum += w[prev] * in.residuals[prev];
    left_weight += w[prev];
    left += count(prev);
    if (left < min_leaf || total - left < min_leaf) continue;
    const double a = in.data->feature(prev, feature);
    const double b = in.data->feature(sorted[i], feature);
    if (!(a < b)) continue;
    const double right_weight = weight - left_weight;
    if (left_weight <= 0 || right_weight <= 0) continue;
    const double right_sum = sum - left_sum;
    const double gain = left_sum * left_sum / left_weight +
                        right_sum * right_sum / right_weight - parent;
    if (gain > best.gain && gain > in.min_gain) {
      double t = a + (b - a) / 2;
      if (!(t > a) || t > b) t = b;
      best = {feature, t, gain, left};
    }
  }
  return best;
}

namespace {

bool feature_enabled(const SplitSearchInput& in, std::size_t f) {
  return in.feature_mask.empty() || in.feature_mask[f] != 0;
}

}  // namespace

SplitCandidate find_best_split_serial(const SplitSearchInput& in, const NodeSamples& node) {
  SplitCandidate best;
  for (std::size_t f = 0; f < node.sorted.size(); ++f) {
    if (!feature_enabled(in, f)) continue;
    const auto cand = best_split_for_feature(in, node.sorted[f], static_cast<int>(f));
    if (cand.feature >= 0 && cand.gain > best.gain) best = cand;
  }
  return best;
}

SplitCandidate find_best_split_parallel(const SplitSearchInput& in, const NodeSamples& node) {
  const long num_features = static_cast<long>(node.sorted.size());
  std::vector<SplitCandidate> per_feature(node.sorted.size());
  const std::size_t n = node.sorted.empty() ? 0 : node.sorted[0].size();
  // Small nodes are not worth a parallel region.
#pragma omp parallel for schedule(dynamic) if (n * node.sorted.size() > 20000)
  for (long f = 0; f < num_features; ++f) {
    if (!feature_enabled(in, static_cast<std::size_t>(f))) continue;
    per_feature[f] = best_split_for_feature(in, node.sorted[f], static_cast<int>(f));
  }
  SplitCandidate best;
  for (const auto& cand : per_feature) {
    if (cand.feature >= 0 && cand.gain > best.gain) best = cand;
  }
  return best;
}

}  // namespace cardrank
