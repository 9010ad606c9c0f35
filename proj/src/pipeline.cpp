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

#include <algorithm>
#include <set>

#include "cardrank/error.hpp"
#include "cardrank/eval.hpp"

namespace cardrank {

LabelSet derive_labels(std::span<const QPV> qpvs, Strategy strategy,
                       const PipelineOptions& options) {
  LabelSet out;
  switch (strategy) {
    case Strategy::kNPL:
      out.card = label_naive_pointwise(qpvs, chain_sessions(qpvs), options.pointwise);
      break;
    case Strategy::kDPL:
      out.card = label_discounted_pointwise(qpvs, chain_sessions(qpvs), options.pointwise);
      break;
    case Strategy::kMPL:
      out.card = label_movement_pointwise(chain_sessions(qpvs), options.movement);
      break;
    case Strategy::kAPL:
      out.card = label_approx_pairwise(qpvs, options.approx_pairwise);
      break;
    case Strategy::kLL:
      out.list = label_listwise(qpvs);
      break;
    case Strategy::kLTL:
      out.card = ltl_labels(fit_ltl_all(qpvs, options.ltl), qpvs);
      break;
    case Strategy::kCTR:
      out.card = label_ctr(qpvs);
      break;
    case Strategy::kHuman: {
      std::set<std::string> queries;
      for (const auto& q : qpvs) queries.insert(q.query);
      for (const auto& j : options.judgments) {
        if (queries.count(j.query)) out.card.push_back(j);
      }
      break;
    }
  }
  return out;
}

TrainedRanker train_ranker(std::span<const QPV> training, Strategy strategy,
                           const GbtConfig& gbt_config, const PipelineOptions& options,
                           std::vector<std::string> universe) {
  TrainedRanker r;
  r.index = build_feature_index(training, std::move(universe), options.smoothing);
  if (options.query_blind) r.index = r.index.query_blind();
  LabelSet labels = derive_labels(training, strategy, options);
  if (strategy == Strategy::kHuman) {
    // Judged cards the log never shows cannot be featurized.
    const auto& u = r.index.universe();
    std::erase_if(labels.card, [&](const CardLabel& l) {
      return !std::binary_search(u.begin(), u.end(), l.card_type);
    });
  }
  const Scenario scenario = scenario_for(strategy);
  const Dataset data = build_training_set(labels, r.index, scenario);
  if (data.rows() == 0) {
    throw DataError("strategy " + to_string(strategy) + " produced no training labels");
  }
  r.model.strategy = strategy;
  r.model.scenario = scenario;
  r.model.universe = r.index.universe();
  r.model.smoothing = options.smoothing;
  r.model.query_blind = options.query_blind;
  r.model.gbt = fit_gbt(data, gbt_config);
  return r;
}

PredictedRanking predict_qpv(const TrainedRanker& ranker, const QPV& qpv) {
  RankRequest request;
  request.query = qpv.query;
  request.candidate_cards = qpv.ranking();
  request.max_list_size = static_cast<int>(qpv.cards.size());
  switch (ranker.model.scenario) {
    case Scenario::kPointwise:
      return rank_pointwise(ranker.model.gbt, ranker.index, request);
    case Scenario::kListwise: {
      // Exact match needs the whole observed pool, so only full-length
      // orderings of it are scored.
      std::vector<std::string> cards = request.candidate_cards;
      std::sort(cards.begin(), cards.end());
      std::vector<std::vector<std::string>> lists;
      do {
        lists.push_back(cards);
      } while (std::next_permutation(cards.begin(), cards.end()));
      return rank_listwise(ranker.model.gbt, ranker.index, request, lists);
    }
    case Scenario::kPairwise:
      break;
  }
  throw DataError("pairwise models have no ranking operation");
}

}  // namespace cardrank
