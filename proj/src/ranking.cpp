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

#include "cardrank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "cardrank/error.hpp"

namespace cardrank {

FeatureIndex::FeatureIndex(std::span<const QPV> training, std::vector<std::string> universe,
                           double smoothing)
    : universe_(std::move(universe)), smoothing_(smoothing) {
  if (smoothing < 0) throw DataError("smoothing must be non-negative");
  std::sort(universe_.begin(), universe_.end());
  universe_.erase(std::unique(universe_.begin(), universe_.end()), universe_.end());
  for (const auto& q : training) {
    query_counts_[q.query]++;
    qpv_ids_.insert(q.qpv_id);
    for (const auto& c : q.cards) {
      auto& s = pairs_[{q.query, c.card_type}];
      s.shown++;
      s.viewed += c.viewed;
      s.clicked += c.clicked;
      s.links += c.num_links;
      s.link_clicks += c.num_link_clicks;
      s.rank_sum += c.rank;
      auto& g = global_links_[c.card_type];
      g.first += c.num_link_clicks;
      g.second += c.num_links;
    }
  }
}

FeatureIndex FeatureIndex::query_blind() const {
  FeatureIndex copy = *this;
  copy.query_counts_.clear();
  copy.pairs_.clear();
  return copy;
}

std::vector<std::string> FeatureIndex::feature_names() const {
  std::vector<std::string> names = {"qc_link_ctr", "qc_view_rate", "qc_click_rate",
                                    "query_log_freq", "qc_mean_rank"};
  for (const auto& c : universe_) names.push_back("is_" + c);
  names.push_back("card_link_ctr");
  return names;
}

namespace {

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

}  // namespace

void FeatureIndex::extract_into(const std::string& query, const std::string& card,
                                std::span<double> out) const {
  auto it = std::lower_bound(universe_.begin(), universe_.end(), card);
  if (it == universe_.end() || *it != card) {
    throw DataError("card type '" + card + "' is outside the feature universe");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const double s = smoothing_;
  if (const PairStats* p = pair_stats(query, card)) {
    out[0] = ratio(static_cast<double>(p->link_clicks), static_cast<double>(p->links) + s);
    out[1] = ratio(static_cast<double>(p->viewed), static_cast<double>(p->shown) + s);
    out[2] = ratio(static_cast<double>(p->clicked), static_cast<double>(p->shown) + s);
    out[4] = ratio(static_cast<double>(p->rank_sum), static_cast<double>(p->shown));
  }
  out[3] = std::log1p(static_cast<double>(query_count(query)));
  out[5 + static_cast<std::size_t>(it - universe_.begin())] = 1.0;
  if (auto g = global_links_.find(card); g != global_links_.end()) {
    out[5 + universe_.size()] = ratio(static_cast<double>(g->second.first),
                                      static_cast<double>(g->second.second) + s);
  }
}

std::vector<double> FeatureIndex::extract(const std::string& query,
                                          const std::string& card) const {
  std::vector<double> v(width());
  extract_into(query, card, v);
  return v;
}

const FeatureIndex::PairStats* FeatureIndex::pair_stats(const std::string& query,
                                                         const std::string& card) const {
  auto it = pairs_.find({query, card});
  return it == pairs_.end() ? nullptr : &it->second;
}

long long FeatureIndex::query_count(const std::string& query) const {
  auto it = query_counts_.find(query);
  return it == query_counts_.end() ? 0 : it->second;
}

FeatureIndex build_feature_index(std::span<const QPV> training,
                                 std::vector<std::string> universe, double smoothing) {
  if (universe.empty()) {
    std::set<std::string> seen;
    for (const auto& q : training) {
      for (const auto& c : q.cards) seen.insert(c.card_type);
    }
    universe.assign(seen.begin(), seen.end());
  }
  return FeatureIndex(training, std::move(universe), smoothing);
}

void write_feature_dump(std::ostream& out, const FeatureIndex& index) {
  out << "query\tcard_type";
  for (const auto& n : index.feature_names()) out << '\t' << n;
  out << '\n';
  for (const auto& [key, stats] : index.pair_table()) {
    if (!std::binary_search(index.universe().begin(), index.universe().end(), key.second)) {
      continue;
    }
    out << key.first << '\t' << key.second;
    for (double v : index.extract(key.first, key.second)) out << '\t' << v;
    out << '\n';
  }
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kPointwise: return "pointwise";
    case Scenario::kPairwise: return "pairwise";
    case Scenario::kListwise: return "listwise";
  }
  return "?";
}

Scenario scenario_for(Strategy s) {
  return s == Strategy::kLL ? Scenario::kListwise : Scenario::kPointwise;
}

Dataset build_pointwise_set(std::span<const CardLabel> labels, const FeatureIndex& index) {
  Dataset data(index.width());
  std::vector<double> row(index.width());
  for (const auto& l : labels) {
    if (l.strategy != labels.front().strategy) {
      throw DataError("training set mixes strategies " + to_string(labels.front().strategy) +
                      " and " + to_string(l.strategy));
    }
    index.extract_into(l.query, l.card_type, row);
    data.add_row(row, l.label);
  }
  return data;
}

Dataset build_pairwise_set(std::span<const PairLabel> labels, const FeatureIndex& index) {
  Dataset data(index.width());
  std::vector<double> a(index.width()), b(index.width());
  for (const auto& l : labels) {
    index.extract_into(l.query, l.preferred, a);
    index.extract_into(l.query, l.other, b);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    data.add_row(a, l.label);
  }
  return data;
}

std::vector<double> list_features(const FeatureIndex& index, const std::string& query,
                                  std::span<const std::string> ranking) {
  std::vector<double> sum(index.width(), 0.0), v(index.width());
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    index.extract_into(query, ranking[k], v);
    const double discount = 1.0 / std::log(2.0 + static_cast<double>(k));
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i] * discount;
  }
  return sum;
}

Dataset build_listwise_set(std::span<const ListLabel> labels, const FeatureIndex& index) {
  Dataset data(index.width());
  for (const auto& l : labels) {
    data.add_row(list_features(index, l.query, l.ranking), l.label);
  }
  return data;
}

Dataset build_training_set(const LabelSet& labels, const FeatureIndex& index,
                           Scenario scenario) {
  const int kinds = !labels.card.empty() + !labels.pair.empty() + !labels.list.empty();
  if (kinds > 1) throw DataError("build_training_set: mixed label kinds");
  switch (scenario) {
    case Scenario::kPointwise:
      if (!labels.pair.empty() || !labels.list.empty()) {
        throw DataError("pointwise scenario needs card labels");
      }
      return build_pointwise_set(labels.card, index);
    case Scenario::kPairwise:
      if (!labels.card.empty() || !labels.list.empty()) {
        throw DataError("pairwise scenario needs pair labels");
      }
      return build_pairwise_set(labels.pair, index);
    case Scenario::kListwise:
      if (!labels.card.empty() || !labels.pair.empty()) {
        throw DataError("listwise scenario needs list labels");
      }
      return build_listwise_set(labels.list, index);
  }
  throw DataError("unknown scenario");
}

namespace {

void check_request(const RankRequest& r) {
  if (r.candidate_cards.empty()) throw DataError("rank: empty candidate set");
  if (r.candidate_cards.size() > kMaxCandidates) {
    throw DataError("rank: more than " + std::to_string(kMaxCandidates) + " candidates");
  }
  std::set<std::string> unique(r.candidate_cards.begin(), r.candidate_cards.end());
  if (unique.size() != r.candidate_cards.size()) {
    throw DataError("rank: duplicate candidate cards");
  }
  if (r.max_list_size < 1) throw DataError("rank: max_list_size must be >= 1");
}

}  // namespace

PredictedRanking rank_pointwise(const GbtModel& model, const FeatureIndex& index,
                                const RankRequest& request) {
  check_request(request);
  std::vector<std::pair<double, std::string>> scored;
  std::vector<double> row(index.width());
  for (const auto& c : request.candidate_cards) {
    index.extract_into(request.query, c, row);
    scored.emplace_back(predict_gbt(model, row), c);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  PredictedRanking out;
  out.query = request.query;
  const std::size_t keep =
      std::min(scored.size(), static_cast<std::size_t>(request.max_list_size));
  for (std::size_t k = 0; k < keep; ++k) {
    out.ranking.push_back(scored[k].second);
    out.score += scored[k].first / std::log(2.0 + static_cast<double>(k));
  }
  return out;
}

std::vector<std::vector<std::string>> enumerate_candidate_lists(
    std::vector<std::string> cards, std::size_t max_size) {
  std::sort(cards.begin(), cards.end());
  const std::size_t n = cards.size();
  max_size = std::min(max_size, n);
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> current;
  std::vector<bool> used(n, false);
  // Depth-first over ordered selections of exactly `len` cards.
  auto extend = [&](auto&& self, std::size_t len) -> void {
    if (current.size() == len) {
      out.push_back(current);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = true;
      current.push_back(cards[i]);
      self(self, len);
      current.pop_back();
      used[i] = false;
    }
  };
  for (std::size_t len = 1; len <= max_size; ++len) extend(extend, len);
  return out;
}

PredictedRanking rank_listwise(
    const GbtModel& model, const FeatureIndex& index, const RankRequest& request,
    const std::optional<std::vector<std::vector<std::string>>>& candidate_lists) {
  check_request(request);
  std::vector<std::vector<std::string>> lists;
  if (candidate_lists) {
    lists = *candidate_lists;
    if (lists.empty()) throw DataError("rank_listwise: empty candidate list set");
  } else {
    if (request.candidate_cards.size() > kMaxListwiseCandidates) {
      throw DataError("rank_listwise: " + std::to_string(request.candidate_cards.size()) +
                      " candidates exceed the enumeration limit of " +
                      std::to_string(kMaxListwiseCandidates) +
                      " (full enumeration grows as O(2^K))");
    }
    lists = enumerate_candidate_lists(request.candidate_cards,
                                      static_cast<std::size_t>(request.max_list_size));
  }
  PredictedRanking best;
  best.query = request.query;
  bool have = false;
  for (const auto& list : lists) {
    if (list.empty()) throw DataError("rank_listwise: empty candidate list");
    const double score = predict_gbt(model, list_features(index, request.query, list));
    if (!have || score > best.score || (score == best.score && list < best.ranking)) {
      best.ranking = list;
      best.score = score;
      have = true;
    }
  }
  return best;
}

std::vector<std::vector<std::string>> read_candidate_lists(std::istream& in) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

std::string serialize(const RankerModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "cardrank-ranker";
  j["version"] = 1;
  j["strategy"] = to_string(m.strategy);
  j["scenario"] = to_string(m.scenario);
  j["universe"] = m.universe;
  j["smoothing"] = m.smoothing;
  j["query_blind"] = m.query_blind;
  j["gbt"] = nlohmann::ordered_json::parse(serialize_gbt(m.gbt));
  return j.dump();
}

RankerModel parse_ranker_model(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "cardrank-ranker") {
      throw DataError("not a cardrank-ranker model");
    }
    RankerModel m;
    m.strategy = parse_strategy(j.at("strategy").get<std::string>());
    const auto scenario = j.at("scenario").get<std::string>();
    if (scenario == "pointwise") {
      m.scenario = Scenario::kPointwise;
    } else if (scenario == "pairwise") {
      m.scenario = Scenario::kPairwise;
    } else if (scenario == "listwise") {
      m.scenario = Scenario::kListwise;
    } else {
      throw DataError("unknown scenario '" + scenario + "'");
    }
    m.universe = j.at("universe").get<std::vector<std::string>>();
    m.smoothing = j.at("smoothing").get<double>();
    m.query_blind = j.at("query_blind").get<bool>();
    m.gbt = parse_gbt(j.at("gbt").dump());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ranker model: ") + e.what());
  }
}

}  // namespace cardrank
