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
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cardrank/qpv.hpp"
#include "cardrank/ranking.hpp"

namespace cardrank {

// Behavioural model of a synthetic card-search world. Latent relevance of a
// (query, card) pair is logistic(concentration * (appeal[card] +
// query_specificity * noise)); users view by position bias, click viewed
// cards with probability = relevance, and reformulate with probability
// logistic(-steepness * (DCG - quality_pivot)), DCG using 1/ln(1+r).
struct WorldConfig {
  int num_queries = 200;
  int num_card_types = 10;
  int num_sessions = 20000;
  std::map<int, double> cards_per_page = {{2, 0.695}, {3, 0.291}, {4, 0.014}};
  double relevance_concentration = 8.0;
  double query_specificity = 0.5;
  double reformulation_steepness = 8.0;
  double quality_pivot = 1.6;  // DCG at which reformulation is a coin flip
  std::vector<double> position_bias = {1.0, 0.8, 0.6, 0.45, 0.35, 0.25, 0.2, 0.15};
  double ideal_display_prob = 0.2;  // otherwise the shown order is shuffled
  double swap_in_prob = 1.0;        // successor pages bring in a new card
  int max_chain_length = 3;
  double linkless_fraction = 0.2;
  int max_links = 6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  std::map<std::string, std::map<std::string, double>> relevance;
  std::map<std::string, std::vector<std::string>> ideal_ranking;
};

// Static parts of a world: card catalogue, link counts, relevance.
struct World {
  std::vector<std::string> card_types;
  std::vector<int> num_links;  // per card type; 0 = link-less card
  std::vector<std::string> queries;
  std::vector<std::vector<double>> relevance;  // [query][card]
  GroundTruth truth;
};

World make_world(const WorldConfig& config);

// DCG of a shown list with 1/ln(1+r) discounts.
double ranking_dcg(std::span<const double> relevance_in_shown_order);
double reformulation_probability(const WorldConfig& config, double dcg);

struct SyntheticLog {
  std::vector<QPV> qpvs;  // ordered by (session_id, timestamp)
  GroundTruth truth;
};

// Sessions are generated in parallel from per-session sub-seeds; the serial
// variant is the reference and must produce the identical log.
SyntheticLog generate_log(const WorldConfig& config);
SyntheticLog generate_log_serial(const WorldConfig& config);

// Ideal order of the candidates under true relevance (ties lexicographic).
PredictedRanking oracle_ranking(const GroundTruth& truth, const std::string& query,
                                std::span<const std::string> candidate_cards);

// One JSON object per query: {"query", "relevance": {...}, "ideal_ranking": [...]}.
void write_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_truth(std::istream& in);

// Editorial judgments simulated from the truth: a subset of queries is
// judged, each grade quantizes relevance plus Gaussian noise into five levels.
struct JudgmentConfig {
  double query_fraction = 0.1;
  double noise_sd = 0.2;
  std::uint64_t seed = 0;
};

struct Judgment {
  std::string query;
  std::string card_type;
  std::string grade;
};

std::vector<Judgment> simulate_judgments(const GroundTruth& truth,
                                         const JudgmentConfig& config);
void write_judgments(std::ostream& out, std::span<const Judgment> judgments);

}  // namespace cardrank
