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
#include <random>
#include <sstream>

#include <json.hpp>

#include "cardrank/error.hpp"
#include "cardrank/qpv.hpp"
#include "cardrank/synth.hpp"
#include "test_util.hpp"

namespace cardrank {
namespace {

using testing::make_qpv;

const char* kValidLine =
    R"({"qpv_id":"a","session_id":"s","timestamp_ms":5,"query":"q","reformulated":true,)"
    R"("cards":[{"card_type":"B","rank":2,"viewed":true,"clicked":false,"num_links":1,)"
    R"("num_link_clicks":0},{"card_type":"A","rank":1,"viewed":true,"clicked":true,)"
    R"("num_links":2,"num_link_clicks":1}]})";

TEST(ParseQpv, EmptyInputGivesNothing) {
  std::istringstream in("");
  EXPECT_TRUE(parse_qpv_log(in).empty());
}

TEST(ParseQpv, SortsCardsByRankAndIgnoresUnknownFields) {
  std::string line = kValidLine;
  line.insert(1, R"("extra":42,)");
  const QPV q = parse_qpv_line(line, 1);
  ASSERT_EQ(q.cards.size(), 2u);
  EXPECT_EQ(q.cards[0].card_type, "A");
  EXPECT_EQ(q.cards[1].card_type, "B");
  EXPECT_EQ(q.outcome(), -1);
  EXPECT_EQ(q.ranking(), (std::vector<std::string>{"A", "B"}));
}

TEST(ParseQpv, BlankLinesAreSkipped) {
  std::istringstream in(std::string("\n") + kValidLine + "\n   \n");
  EXPECT_EQ(parse_qpv_log(in).size(), 1u);
}

TEST(ParseQpv, DuplicateRankNamesTheLine) {
  std::string line = kValidLine;
  line.replace(line.find("\"rank\":2"), 8, "\"rank\":1");
  std::istringstream in("\n" + line + "\n");
  try {
    parse_qpv_log(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(ParseQpv, MissingFieldAndMalformedJson) {
  std::string line = kValidLine;
  line.replace(line.find("\"query\":\"q\","), 12, "");
  EXPECT_THROW(parse_qpv_line(line, 3), ParseError);
  EXPECT_THROW(parse_qpv_line("{not json", 1), ParseError);
  EXPECT_THROW(parse_qpv_line("[1,2]", 1), ParseError);
}

TEST(ValidateQpv, RejectsEveryInvariantBreach) {
  auto base = [] {
    return make_qpv("x", "s", 1, "q",
                    {testing::CardSpec{"A", true, true, 2, 1}, testing::CardSpec{"B"}}, false);
  };
  EXPECT_NO_THROW(validate_qpv(base()));

  QPV empty = base();
  empty.cards.clear();
  EXPECT_THROW(validate_qpv(empty), DataError);

  QPV dup_card = base();
  dup_card.cards[1].card_type = "A";
  EXPECT_THROW(validate_qpv(dup_card), DataError);

  QPV gap = base();
  gap.cards[1].rank = 3;
  EXPECT_THROW(validate_qpv(gap), DataError);

  QPV zero_rank = base();
  zero_rank.cards[0].rank = 0;
  EXPECT_THROW(validate_qpv(zero_rank), DataError);

  QPV too_many_clicks = base();
  too_many_clicks.cards[0].num_link_clicks = 3;
  EXPECT_THROW(validate_qpv(too_many_clicks), DataError);

  QPV unseen_click = base();
  unseen_click.cards[0].viewed = false;
  EXPECT_THROW(validate_qpv(unseen_click), DataError);

  QPV click_without_link_click = base();
  click_without_link_click.cards[0].num_link_clicks = 0;
  EXPECT_THROW(validate_qpv(click_without_link_click), DataError);
}

TEST(ParseQpv, RoundTripsGeneratorOutput) {
  WorldConfig config;
  config.num_sessions = 90;
  config.seed = 3;
  const auto log = generate_log(config);
  std::vector<QPV> first(log.qpvs.begin(),
                         log.qpvs.begin() + std::min<std::size_t>(100, log.qpvs.size()));
  std::ostringstream out;
  write_qpv_log(out, first);
  std::istringstream in(out.str());
  const auto parsed = parse_qpv_log(in);
  EXPECT_EQ(parsed, first);
  // Field-level comparison against the raw JSON, independent of our writer.
  std::istringstream again(out.str());
  std::string line;
  std::size_t i = 0;
  while (std::getline(again, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("qpv_id"), first[i].qpv_id);
    EXPECT_EQ(j.at("cards").size(), first[i].cards.size());
    EXPECT_EQ(serialize_qpv(parsed[i]), line);
    ++i;
  }
  EXPECT_EQ(i, first.size());
}

TEST(ChainSessions, NegativeThenPositiveGivesOnePair) {
  const auto qpvs = testing::reformulation_example();
  const auto pairs = chain_sessions(qpvs);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].prior->qpv_id, "q1");
  EXPECT_EQ(pairs[0].successor->qpv_id, "q2");
}

TEST(ChainSessions, OnlyTheLastNegativeOfAChainPairs) {
  std::vector<QPV> qpvs = {make_qpv("c", "s", 30, "q", {"A"}, false),
                           make_qpv("a", "s", 10, "q", {"A"}, true),
                           make_qpv("b", "s", 20, "q", {"A"}, true)};
  const auto pairs = chain_sessions(qpvs);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].prior->qpv_id, "b");
  EXPECT_EQ(pairs[0].successor->qpv_id, "c");
}

TEST(ChainSessions, PositivesAndAbandonmentGiveNothing) {
  std::vector<QPV> qpvs = {make_qpv("a", "s", 10, "q", {"A"}, false),
                           make_qpv("b", "s", 20, "q", {"A"}, false),
                           make_qpv("c", "t", 10, "q", {"A"}, false),
                           make_qpv("d", "t", 20, "q", {"A"}, true)};
  EXPECT_TRUE(chain_sessions(qpvs).empty());
}

TEST(ChainSessions, TimestampTieIsAnError) {
  std::vector<QPV> qpvs = {make_qpv("a", "s", 10, "q", {"A"}, true),
                           make_qpv("b", "s", 10, "q", {"A"}, false)};
  EXPECT_THROW(chain_sessions(qpvs), DataError);
}

TEST(ChainSessions, PairsSatisfyTheirInvariantsOnRandomSessions) {
  std::mt19937 rng(11);
  std::vector<QPV> qpvs;
  for (int s = 0; s < 200; ++s) {
    const int len = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < len; ++k) {
      qpvs.push_back(make_qpv("s" + std::to_string(s) + "-" + std::to_string(k),
                              "s" + std::to_string(s), 100 * k + rng() % 50, "q", {"A"},
                              rng() % 2 == 0));
    }
  }
  std::shuffle(qpvs.begin(), qpvs.end(), rng);
  std::set<const QPV*> priors;
  for (const auto& p : chain_sessions(qpvs)) {
    EXPECT_EQ(p.prior->session_id, p.successor->session_id);
    EXPECT_LT(p.prior->timestamp_ms, p.successor->timestamp_ms);
    EXPECT_TRUE(p.prior->reformulated);
    EXPECT_FALSE(p.successor->reformulated);
    EXPECT_TRUE(priors.insert(p.prior).second);
    for (const auto& q : qpvs) {
      if (q.session_id != p.prior->session_id) continue;
      EXPECT_FALSE(q.timestamp_ms > p.prior->timestamp_ms &&
                   q.timestamp_ms < p.successor->timestamp_ms);
    }
  }
}

TEST(Stats, EmptyInputIsAnError) {
  EXPECT_THROW(compute_stats({}), DataError);
}

TEST(Stats, ThreeOfTenReformulatedLandsInBucketPointThree) {
  std::vector<QPV> qpvs;
  for (int i = 0; i < 10; ++i) {
    qpvs.push_back(make_qpv("q" + std::to_string(i), "s" + std::to_string(i), 1, "term",
                            {"A", "B"}, i < 3));
  }
  const auto r = compute_stats(qpvs);
  EXPECT_EQ(r.num_qpvs, 10);
  EXPECT_EQ(r.num_distinct_queries, 1);
  EXPECT_EQ(r.num_card_types, 2);
  EXPECT_EQ(r.reformulation_ratio_histogram, (std::map<int, std::int64_t>{{3, 1}}));
  EXPECT_EQ(r.cards_per_qpv_distribution, (std::map<int, double>{{2, 100.0}}));
  EXPECT_DOUBLE_EQ(r.label_split_per_card_count.at(2).negative_pct, 30.0);
}

TEST(Stats, SplitsSumToHundredAndHistogramCoversAllQueries) {
  WorldConfig config;
  config.num_sessions = 3000;
  config.cards_per_page = {{2, 0.7}, {3, 0.3}};
  config.seed = 5;
  const auto log = generate_log(config);
  const auto r = compute_stats(log.qpvs);
  std::int64_t queries = 0;
  for (const auto& [bucket, n] : r.reformulation_ratio_histogram) queries += n;
  EXPECT_EQ(queries, r.num_distinct_queries);
  for (const auto& [k, s] : r.label_split_per_card_count) {
    EXPECT_NEAR(s.positive_pct + s.negative_pct, 100.0, 0.01);
  }
  for (const auto& [k, s] : r.card_group_label_split) {
    EXPECT_NEAR(s.positive_pct + s.negative_pct, 100.0, 0.01);
  }
  double pct = 0.0;
  for (const auto& [k, p] : r.cards_per_qpv_distribution) pct += p;
  EXPECT_NEAR(pct, 100.0, 1e-9);
  const auto json = nlohmann::json::parse(stats_to_json(r));
  EXPECT_EQ(json.at("num_qpvs"), r.num_qpvs);
}

}  // namespace
}  // namespace cardrank
