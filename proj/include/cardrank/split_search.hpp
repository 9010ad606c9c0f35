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
#include <span>
#include <vector>

#include "cardrank/gbt.hpp"

namespace cardrank {

struct SplitCandidate {
  int feature = -1;  // -1: no admissible split
  double threshold = 0.0;
  double gain = 0.0;  // weighted SSE reduction
  std::size_t left_count = 0;  // samples routed left
};

// One node's samples, presorted per feature. sorted[f] lists the node's
// sample ids in ascending order of feature f (ties by sample id).
struct NodeSamples {
  std::vector<std::span<const std::size_t>> sorted;
};

struct SplitSearchInput {
  const Dataset* data = nullptr;
  std::span<const double> residuals;
  std::span<const unsigned char> feature_mask;  // empty: all features
  // Multiplicity of each sample id for the leaf-size limit; empty: all 1.
  std::span<const std::size_t> counts;
  int min_samples_per_leaf = 1;
  double min_gain = 0.0;
};

// Best split of a single feature; thresholds are midpoints between
// consecutive distinct values, scanned in ascending order.
SplitCandidate best_split_for_feature(const SplitSearchInput& in,
                                      std::span<const std::size_t> sorted, int feature);

// Reference implementation: features scanned in order, strict improvement,
// so ties go to the lowest feature index and then the lowest threshold.
SplitCandidate find_best_split_serial(const SplitSearchInput& in, const NodeSamples& node);

// OpenMP over features with an in-order reduction; returns exactly what the
// serial version returns.
SplitCandidate find_best_split_parallel(const SplitSearchInput& in, const NodeSamples& node);

}  // namespace cardrank
