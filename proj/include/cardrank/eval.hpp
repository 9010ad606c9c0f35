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

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cardrank/gbt.hpp"
#include "cardrank/labeling.hpp"
#include "cardrank/ltl.hpp"
#include "cardrank/qpv.hpp"
#include "cardrank/ranking.hpp"

namespace cardrank {

// Exact-match evaluation. A satisfied (positive) QPV is matched when the
// prediction reproduces its card list; matching a reformulated (negative)
// list is penalized through f = 2 tpr (1 - tnr) / (tpr + 1 - tnr).
struct MetricsReport {
  double tpr = 0.0;
  double tnr = 0.0;
  double f_measure = 0.0;
  long long n_positive = 0;
  long long n_negative = 0;
  long long matched_positive = 0;
  long long matched_negative = 0;

  bool operator==(const MetricsReport&) const = default;
};

// Fills the ratios from the four counters; zero denominators give 0.
MetricsReport make_metrics(long long n_positive, long long matched_positive,
                           long long n_negative, long long matched_negative);

// Throws DataError naming the first QPV without a prediction.
MetricsReport evaluate(const std::map<std::string, PredictedRanking>& predictions,
                       std::span<const QPV> qpvs);

struct CvConfig {
  int num_folds = 5;
  std::uint64_t seed = 0;
  // Folds split by query, so held-out queries are always unseen. Training
  // on query-blind features keeps train and test rows alike.
  bool query_blind_training = true;
};

// Fold of a query term: FNV-1a of the text mixed with the seed.
int fold_of(const std::string& query, const CvConfig& config);

// Everything besides the GBT settings that shapes a strategy's labels.
struct PipelineOptions {
  PointwiseOptions pointwise;
  MovementConfig movement;
  ApproxPairwiseOptions approx_pairwise;
  FitConfig ltl;
  std::vector<CardLabel> judgments;  // used by the human strategy only
  double smoothing = 1.0;
  // Drop query-conditioned statistics from the features.
  bool query_blind = false;
};

// Labels of one strategy over a training log. The human strategy keeps the
// judgments whose query occurs in `qpvs`.
LabelSet derive_labels(std::span<const QPV> qpvs, Strategy strategy,
                       const PipelineOptions& options);

struct TrainedRanker {
  RankerModel model;
  FeatureIndex index;
};

// Labels, feature index and GBT fit, all from `training` only.
TrainedRanker train_ranker(std::span<const QPV> training, Strategy strategy,
                           const GbtConfig& gbt_config, const PipelineOptions& options,
                           std::vector<std::string> universe = {});

// Reorders the cards observed in `qpv` with the trained model.
PredictedRanking predict_qpv(const TrainedRanker& ranker, const QPV& qpv);

struct FoldReport {
  int fold = 0;
  std::size_t train_qpvs = 0;
  std::size_t test_qpvs = 0;
  std::size_t train_queries = 0;
  std::size_t test_queries = 0;
  MetricsReport metrics;
};

struct CvReport {
  std::string strategy;
  int num_folds = 0;
  std::uint64_t seed = 0;
  std::vector<FoldReport> folds;
  // Mean and sample standard deviation of tpr, tnr and f over folds.
  double mean_tpr = 0.0, mean_tnr = 0.0, mean_f = 0.0;
  double stddev_tpr = 0.0, stddev_tnr = 0.0, stddev_f = 0.0;
  std::vector<std::string> warnings;
};

CvReport cross_validate(std::span<const QPV> qpvs, Strategy strategy,
                        const GbtConfig& gbt_config, const CvConfig& cv_config,
                        const PipelineOptions& options = {});

// Same fold structure, with a fixed predictor instead of a trained model.
// Useful for reference rankers such as the ground-truth oracle.
using QpvPredictor = std::function<PredictedRanking(const QPV&)>;
CvReport cross_validate_predictor(std::span<const QPV> qpvs, const std::string& name,
                                  const CvConfig& cv_config, const QpvPredictor& predictor);

std::string to_json(const MetricsReport& m);
std::string to_json(const CvReport& report);
// One line: strategy, mean tpr, mean tnr, mean f, stddev f.
void write_tsv_row(std::ostream& out, const CvReport& report, bool header = false);

}  // namespace cardrank
