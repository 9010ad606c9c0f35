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

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cardrank/gbt.hpp"
#include "cardrank/labeling.hpp"
#include "cardrank/qpv.hpp"

namespace cardrank {

// Log-derived statistics behind the feature schema. Built from training QPVs
// only and immutable afterwards.
//
// Schema (width 6 + |universe|):
//   0  query-card link CTR         link clicks / (links + s)
//   1  query-card view rate        views / (shown + s)
//   2  query-card click rate       clicks / (shown + s)
//   3  query frequency             ln(1 + #QPVs of the query)
//   4  query-card position prior   mean historical rank (0 if never shown)
//   5.. card-type one-hot
//   last  global card link CTR     link clicks / (links + s)
// where s is the smoothing added to denominators.
class FeatureIndex {
 public:
  struct PairStats {
    long long shown = 0;
    long long viewed = 0;
    long long clicked = 0;
    long long links = 0;
    long long link_clicks = 0;
    long long rank_sum = 0;
  };

  FeatureIndex() = default;
  FeatureIndex(std::span<const QPV> training, std::vector<std::string> universe,
               double smoothing);

  std::size_t width() const { return 6 + universe_.size(); }
  const std::vector<std::string>& universe() const { return universe_; }
  double smoothing() const { return smoothing_; }
  std::vector<std::string> feature_names() const;

  // Throws DataError when card_type is outside the universe.
  std::vector<double> extract(const std::string& query, const std::string& card_type) const;
  void extract_into(const std::string& query, const std::string& card_type,
                    std::span<double> out) const;

  const PairStats* pair_stats(const std::string& query, const std::string& card) const;
  long long query_count(const std::string& query) const;
  const std::map<std::pair<std::string, std::string>, PairStats>& pair_table() const {
    return pairs_;
  }
  // Copy that keeps only card-level statistics, so every query looks unseen.
  FeatureIndex query_blind() const;

  bool contains_qpv(const std::string& qpv_id) const { return qpv_ids_.count(qpv_id) > 0; }
  std::size_t num_qpvs() const { return qpv_ids_.size(); }

 private:
  std::vector<std::string> universe_;
  double smoothing_ = 1.0;
  std::map<std::string, long long> query_counts_;
  std::map<std::pair<std::string, std::string>, PairStats> pairs_;
  std::map<std::string, std::pair<long long, long long>> global_links_;  // clicks, links
  std::unordered_set<std::string> qpv_ids_;
};

// Universe defaults to the card types seen in `training`.
FeatureIndex build_feature_index(std::span<const QPV> training,
                                 std::vector<std::string> universe = {},
                                 double smoothing = 1.0);

// TSV audit dump: header of schema slot names, one row per (query, card)
// pair seen in the index.
void write_feature_dump(std::ostream& out, const FeatureIndex& index);

enum class Scenario { kPointwise, kPairwise, kListwise };

std::string to_string(Scenario s);
Scenario scenario_for(Strategy s);

// Rows: pointwise -> features of (query, card); pairwise -> features of
// preferred minus other; listwise -> sum over positions k of features / ln(1+k).
Dataset build_pointwise_set(std::span<const CardLabel> labels, const FeatureIndex& index);
Dataset build_pairwise_set(std::span<const PairLabel> labels, const FeatureIndex& index);
Dataset build_listwise_set(std::span<const ListLabel> labels, const FeatureIndex& index);
Dataset build_training_set(const LabelSet& labels, const FeatureIndex& index,
                           Scenario scenario);

std::vector<double> list_features(const FeatureIndex& index, const std::string& query,
                                  std::span<const std::string> ranking);

struct RankRequest {
  std::string query;
  std::vector<std::string> candidate_cards;
  int max_list_size = 8;
};

struct PredictedRanking {
  std::string query;
  std::vector<std::string> ranking;
  double score = 0.0;

  bool operator==(const PredictedRanking&) const = default;
};

inline constexpr std::size_t kMaxCandidates = 8;
inline constexpr std::size_t kMaxListwiseCandidates = 6;

// Sorts candidates by descending model score (ties: ascending card_type) and
// truncates. `score` is the position-discounted sum of the kept scores.
PredictedRanking rank_pointwise(const GbtModel& model, const FeatureIndex& index,
                                const RankRequest& request);

// All orderings of all non-empty subsets with at most max_size cards, in
// length-then-lexicographic order.
std::vector<std::vector<std::string>> enumerate_candidate_lists(
    std::vector<std::string> cards, std::size_t max_size);

// Scores candidate_lists (or the full enumeration) with a listwise model and
// returns the argmax; ties go to the lexicographically smallest list.
PredictedRanking rank_listwise(
    const GbtModel& model, const FeatureIndex& index, const RankRequest& request,
    const std::optional<std::vector<std::vector<std::string>>>& candidate_lists =
        std::nullopt);

// Candidate-list file: one JSON array of card types per line.
std::vector<std::vector<std::string>> read_candidate_lists(std::istream& in);

// A trained ranking function plus what is needed to rebuild its features.
struct RankerModel {
  Strategy strategy = Strategy::kNPL;
  Scenario scenario = Scenario::kPointwise;
  std::vector<std::string> universe;
  double smoothing = 1.0;
  bool query_blind = false;  // features built from FeatureIndex::query_blind()
  GbtModel gbt;
};

std::string serialize(const RankerModel& model);
RankerModel parse_ranker_model(const std::string& text);

}  // namespace cardrank
