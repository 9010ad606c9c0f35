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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "cardrank/error.hpp"
#include "cardrank/ranking.hpp"
#include "test_util.hpp"

namespace cardrank {
namespace {

using testing::CardSpec;
using testing::make_qpv;

std::vector<QPV> small_log() {
  return {make_qpv("a", "s1", 1, "obama",
                   {CardSpec{"News", true, true, 4, 2}, CardSpec{"Web", true, false, 3, 0},
                    CardSpec{"Image", false}},
                   false),
          make_qpv("b", "s2", 1, "obama",
                   {CardSpec{"Web", true, true, 3, 1}, CardSpec{"News", true, false, 4, 0}},
                   true),
          make_qpv("c", "s3", 1, "apple", {CardSpec{"News", true, true, 2, 2}}, false)};
}

// Independent recount straight from the observations.
std::vector<double> recount(const std::vector<QPV>& log, const std::vector<std::string>& universe,
                            const std::string& query, const std::string& card, double s) {
  double shown = 0, viewed = 0, clicked = 0, links = 0, link_clicks = 0, rank_sum = 0;
  double all_links = 0, all_link_clicks = 0, qpvs = 0;
  for (const auto& q : log) {
    if (q.query == query) qpvs += 1;
    for (const auto& c : q.cards) {
      if (c.card_type != card) continue;
      all_links += c.num_links;
      all_link_clicks += c.num_link_clicks;
      if (q.query != query) continue;
      shown += 1;
      viewed += c.viewed;
      clicked += c.clicked;
      links += c.num_links;
      link_clicks += c.num_link_clicks;
      rank_sum += c.rank;
    }
  }
  std::vector<double> f(6 + universe.size(), 0.0);
  if (shown > 0) {
    f[0] = link_clicks / (links + s);
    f[1] = viewed / (shown + s);
    f[2] = clicked / (shown + s);
    f[4] = rank_sum / shown;
  }
  f[3] = std::log(1.0 + qpvs);
  const auto at = std::find(universe.begin(), universe.end(), card) - universe.begin();
  f[5 + at] = 1.0;
  f.back() = all_links + s > 0 ? all_link_clicks / (all_links + s) : 0.0;
  return f;
}

TEST(FeatureIndex, MatchesAnIndependentRecount) {
  const auto log = small_log();
  const auto index = build_feature_index(log, {}, 1.0);
  const std::vector<std::string> universe = {"Image", "News", "Web"};
  ASSERT_EQ(index.universe(), universe);
  ASSERT_EQ(index.width(), 9u);
  ASSERT_EQ(index.feature_names().size(), index.width());
  for (const char* query : {"obama", "apple", "unseen"}) {
    for (const auto& card : universe) {
      const auto expected = recount(log, universe, query, card, 1.0);
      const auto got = index.extract(query, card);
      ASSERT_EQ(got.size(), expected.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_DOUBLE_EQ(got[i], expected[i]) << query << "/" << card << " feature " << i;
      }
    }
  }
  EXPECT_THROW(index.extract("obama", "Weather"), DataError);
}

TEST(FeatureIndex, QueryBlindCopyForgetsQueries) {
  const auto index = build_feature_index(small_log());
  const auto blind = index.query_blind();
  EXPECT_EQ(blind.extract("obama", "News"), index.extract("never-seen", "News"));
  EXPECT_TRUE(blind.contains_qpv("a"));
  EXPECT_EQ(blind.query_count("obama"), 0);
}

TEST(FeatureIndex, RejectsNegativeSmoothing) {
  EXPECT_THROW(build_feature_index(small_log(), {}, -1.0), DataError);
}

TEST(TrainingSets, PairRowsAreFeatureDifferences) {
  const auto index = build_feature_index(small_log());
  const auto labels = label_pairwise(small_log());
  const auto d = build_pairwise_set(labels, index);
  ASSERT_EQ(d.rows(), labels.size());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto a = index.extract(labels[r].query, labels[r].preferred);
    const auto b = index.extract(labels[r].query, labels[r].other);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(d.feature(r, i), a[i] - b[i]);
      // Swapping the pair negates the row.
      EXPECT_EQ(b[i] - a[i], -d.feature(r, i));
    }
    EXPECT_EQ(d.targets()[r], labels[r].label);
  }
}

TEST(TrainingSets, ListRowsAreDiscountedSums) {
  const auto index = build_feature_index(small_log());
  const std::vector<std::string> ranking = {"Web", "News", "Image"};
  const auto f = list_features(index, "obama", ranking);
  const auto web = index.extract("obama", "Web");
  const auto news = index.extract("obama", "News");
  const auto image = index.extract("obama", "Image");
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(f[i], web[i] / std::log(2.0) + news[i] / std::log(3.0) + image[i] / std::log(4.0),
                1e-12);
  }
}

TEST(TrainingSets, MixedInputsAreRejected) {
  const auto index = build_feature_index(small_log());
  LabelSet set;
  set.card = label_ctr(small_log());
  EXPECT_THROW(build_training_set(set, index, Scenario::kListwise), DataError);
  set.list = label_listwise(small_log());
  EXPECT_THROW(build_training_set(set, index, Scenario::kPointwise), DataError);
  std::vector<CardLabel> mixed = label_ctr(small_log());
  mixed.back().strategy = Strategy::kNPL;
  EXPECT_THROW(build_pointwise_set(mixed, index), DataError);
}

// One stump per card on its indicator column: the card's weight is added
// when the column reaches `threshold`. With pointwise rows the column is 0/1;
// with list rows it holds the position discount, so the threshold decides
// which positions earn the weight.
GbtModel one_hot_model(const FeatureIndex& index, const std::map<std::string, double>& weight,
                       const std::map<std::string, double>& threshold = {}) {
  GbtModel m;
  m.num_features = index.width();
  m.shrinkage = 1.0;
  for (std::size_t u = 0; u < index.universe().size(); ++u) {
    const auto& card = index.universe()[u];
    const double t = threshold.count(card) ? threshold.at(card) : 0.5;
    RegressionTree tree;
    tree.nodes = {{static_cast<int>(5 + u), t, 1, 2, 0.0}, {-1, 0, -1, -1, 0.0},
                  {-1, 0, -1, -1, weight.at(card)}};
    tree.num_leaves = 2;
    m.trees.push_back(tree);
    m.tree_weights.push_back(1.0);
  }
  return m;
}

TEST(RankPointwise, SortsByScoreThenName) {
  const auto index = build_feature_index(small_log());
  const auto model = one_hot_model(index, {{"Image", 1.0}, {"News", 3.0}, {"Web", 1.0}});
  RankRequest r{"obama", {"Web", "Image", "News"}, 8};
  const auto p = rank_pointwise(model, index, r);
  EXPECT_EQ(p.ranking, (std::vector<std::string>{"News", "Image", "Web"}));
  EXPECT_NEAR(p.score, 3 / std::log(2.0) + 1 / std::log(3.0) + 1 / std::log(4.0), 1e-12);
  r.max_list_size = 1;
  EXPECT_EQ(rank_pointwise(model, index, r).ranking.size(), 1u);
}

TEST(RankPointwise, ValidatesRequests) {
  const auto index = build_feature_index(small_log());
  const auto model = one_hot_model(index, {{"Image", 1.0}, {"News", 3.0}, {"Web", 1.0}});
  EXPECT_THROW(rank_pointwise(model, index, {"q", {}, 8}), DataError);
  EXPECT_THROW(rank_pointwise(model, index, {"q", {"News", "News"}, 8}), DataError);
  EXPECT_THROW(rank_pointwise(model, index, {"q", {"News"}, 0}), DataError);
  EXPECT_THROW(rank_pointwise(model, index, {"q", {"Nope"}, 8}), DataError);
}

TEST(CandidateLists, CountsMatchPartialPermutations) {
  EXPECT_EQ(enumerate_candidate_lists({"c", "a", "b"}, 3).size(), 15u);
  EXPECT_EQ(enumerate_candidate_lists({"a", "b", "c", "d"}, 2).size(), 4u + 12u);
  const auto lists = enumerate_candidate_lists({"a", "b", "c", "d", "e"}, 5);
  EXPECT_EQ(lists.size(), 5u + 20u + 60u + 120u + 120u);
  std::set<std::vector<std::string>> unique(lists.begin(), lists.end());
  EXPECT_EQ(unique.size(), lists.size());
}

TEST(RankListwise, PicksTheBestScoringPermutation) {
  const auto index = build_feature_index(small_log());
  const std::map<std::string, double> w = {{"Image", 0.5}, {"News", 2.0}, {"Web", 1.0}};
  const std::map<std::string, double> t = {{"Image", 0.5}, {"News", 1.0}, {"Web", 0.8}};
  const auto model = one_hot_model(index, w, t);
  RankRequest r{"obama", {"Image", "News", "Web"}, 3};
  const auto got = rank_listwise(model, index, r);
  // Oracle: score every ordering by hand, a card earning its weight when its
  // position discount reaches the card's threshold.
  double best = -1e300;
  std::vector<std::string> best_list;
  int lists = 0;
  std::vector<std::string> cards = {"Image", "News", "Web"};
  for (std::size_t len = 1; len <= 3; ++len) {
    std::sort(cards.begin(), cards.end());
    do {
      std::vector<std::string> list(cards.begin(), cards.begin() + len);
      if (len < 3 && !std::is_sorted(cards.begin() + len, cards.end())) continue;
      ++lists;
      double s = 0;
      for (std::size_t k = 0; k < list.size(); ++k) {
        if (1.0 / std::log(2.0 + k) >= t.at(list[k])) s += w.at(list[k]);
      }
      if (s > best || (s == best && list < best_list)) {
        best = s;
        best_list = list;
      }
    } while (std::next_permutation(cards.begin(), cards.end()));
  }
  EXPECT_EQ(lists, 15);
  EXPECT_EQ(got.ranking, best_list);
  EXPECT_EQ(got.ranking, (std::vector<std::string>{"News", "Web", "Image"}));
  EXPECT_EQ(got.score, 3.5);

  const std::vector<std::vector<std::string>> only = {{"Web", "Image"}, {"Image"}};
  EXPECT_EQ(rank_listwise(model, index, r, only).ranking,
            (std::vector<std::string>{"Web", "Image"}));
}

TEST(RankListwise, RefusesLargeEnumerations) {
  std::vector<std::string> cards;
  std::vector<QPV> log;
  for (int i = 0; i < 7; ++i) cards.push_back("k" + std::to_string(i));
  log.push_back(make_qpv("a", "s", 1, "q", cards, false));
  const auto index = build_feature_index(log);
  std::map<std::string, double> w;
  for (const auto& c : cards) w[c] = 1.0;
  const auto model = one_hot_model(index, w);
  EXPECT_THROW(rank_listwise(model, index, {"q", cards, 7}), DataError);
  const std::vector<std::vector<std::string>> given = {{"k1", "k0"}};
  EXPECT_NO_THROW(rank_listwise(model, index, {"q", cards, 7}, given));
}

TEST(RankerModel, SerializationRoundTrips) {
  const auto index = build_feature_index(small_log());
  RankerModel m;
  m.strategy = Strategy::kLL;
  m.scenario = Scenario::kListwise;
  m.universe = index.universe();
  m.smoothing = 0.5;
  m.query_blind = true;
  m.gbt = one_hot_model(index, {{"Image", 0.5}, {"News", 2.0}, {"Web", 1.0}});
  const auto text = serialize(m);
  const auto back = parse_ranker_model(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.strategy, Strategy::kLL);
  EXPECT_TRUE(back.query_blind);
  EXPECT_THROW(parse_ranker_model("{\"x\":1}"), DataError);
}

TEST(CandidateLists, ReadFromJsonLines) {
  std::istringstream in("[\"a\",\"b\"]\n\n[\"c\"]\n");
  EXPECT_EQ(read_candidate_lists(in).size(), 2u);
  std::istringstream bad("[1,2]\n");
  EXPECT_THROW(read_candidate_lists(bad), ParseError);
}

}  // namespace
}  // namespace cardrank
