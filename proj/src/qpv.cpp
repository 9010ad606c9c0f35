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

#include "cardrank/qpv.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cardrank/error.hpp"

namespace cardrank {

using nlohmann::json;

std::vector<std::string> QPV::ranking() const {
  std::vector<std::string> out;
  out.reserve(cards.size());
  for (const auto& c : cards) out.push_back(c.card_type);
  return out;
}

const CardObservation* QPV::find(const std::string& card_type) const {
  for (const auto& c : cards) {
    if (c.card_type == card_type) return &c;
  }
  return nullptr;
}

void validate_qpv(const QPV& qpv) {
  auto fail = [&](const std::string& why) {
    throw DataError("qpv '" + qpv.qpv_id + "': " + why);
  };
  if (qpv.cards.empty()) fail("empty card list");
  std::vector<int> ranks;
  std::set<std::string> types;
  for (const auto& c : qpv.cards) {
    if (c.rank < 1) fail("rank must be >= 1");
    if (c.num_links < 0 || c.num_link_clicks < 0) fail("negative link count");
    if (c.num_link_clicks > c.num_links) fail("num_link_clicks > num_links");
    if (c.clicked && !c.viewed) fail("card '" + c.card_type + "' clicked but not viewed");
    if (c.clicked && c.num_links > 0 && c.num_link_clicks < 1) {
      fail("card '" + c.card_type + "' clicked without a link click");
    }
    if (!types.insert(c.card_type).second) {
      fail("duplicate card_type '" + c.card_type + "'");
    }
    ranks.push_back(c.rank);
  }
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (i > 0 && ranks[i] == ranks[i - 1]) {
      fail("duplicate rank " + std::to_string(ranks[i]));
    }
    if (ranks[i] != static_cast<int>(i) + 1) fail("ranks are not contiguous from 1");
  }
}

namespace {

template <typename T>
T required(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(line_no, std::string("missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(line_no, std::string("field '") + key + "' has wrong type");
  }
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char ch) { return std::isspace(ch); });
}

}  // namespace

QPV parse_qpv_line(const std::string& line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line_no, "record is not an object");

  QPV qpv;
  qpv.qpv_id = required<std::string>(obj, "qpv_id", line_no);
  qpv.session_id = required<std::string>(obj, "session_id", line_no);
  if (!obj.contains("timestamp_ms") || !obj["timestamp_ms"].is_number_integer()) {
    throw ParseError(line_no, "field 'timestamp_ms' missing or not an integer");
  }
  qpv.timestamp_ms = obj["timestamp_ms"].get<std::int64_t>();
  qpv.query = required<std::string>(obj, "query", line_no);
  if (!obj.contains("reformulated") || !obj["reformulated"].is_boolean()) {
    throw ParseError(line_no, "field 'reformulated' missing or not a boolean");
  }
  qpv.reformulated = obj["reformulated"].get<bool>();
  auto cards = obj.find("cards");
  if (cards == obj.end() || !cards->is_array()) {
    throw ParseError(line_no, "field 'cards' missing or not an array");
  }
  for (const auto& c : *cards) {
    if (!c.is_object()) throw ParseError(line_no, "card is not an object");
    CardObservation card;
    card.card_type = required<std::string>(c, "card_type", line_no);
    card.rank = required<int>(c, "rank", line_no);
    card.viewed = required<bool>(c, "viewed", line_no);
    card.clicked = required<bool>(c, "clicked", line_no);
    card.num_links = required<int>(c, "num_links", line_no);
    card.num_link_clicks = required<int>(c, "num_link_clicks", line_no);
    qpv.cards.push_back(std::move(card));
  }
  try {
    validate_qpv(qpv);
  } catch (const DataError& e) {
    throw ParseError(line_no, e.what());
  }
  std::sort(qpv.cards.begin(), qpv.cards.end(),
            [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return qpv;
}

std::vector<QPV> parse_qpv_log(std::istream& in) {
  std::vector<QPV> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    out.push_back(parse_qpv_line(line, line_no));
  }
  return out;
}

std::string serialize_qpv(const QPV& qpv) {
  // ordered_json keeps the documented field order in the output.
  nlohmann::ordered_json obj;
  obj["qpv_id"] = qpv.qpv_id;
  obj["session_id"] = qpv.session_id;
  obj["timestamp_ms"] = qpv.timestamp_ms;
  obj["query"] = qpv.query;
  obj["reformulated"] = qpv.reformulated;
  obj["cards"] = nlohmann::ordered_json::array();
  for (const auto& c : qpv.cards) {
    nlohmann::ordered_json card;
    card["card_type"] = c.card_type;
    card["rank"] = c.rank;
    card["viewed"] = c.viewed;
    card["clicked"] = c.clicked;
    card["num_links"] = c.num_links;
    card["num_link_clicks"] = c.num_link_clicks;
    obj["cards"].push_back(std::move(card));
  }
  return obj.dump();
}

void write_qpv_log(std::ostream& out, std::span<const QPV> qpvs) {
  for (const auto& q : qpvs) out << serialize_qpv(q) << '\n';
}

std::vector<ReformulationPair> chain_sessions(std::span<const QPV> qpvs) {
  std::map<std::string, std::vector<const QPV*>> sessions;
  for (const auto& q : qpvs) sessions[q.session_id].push_back(&q);

  std::vector<ReformulationPair> pairs;
  for (auto& [sid, members] : sessions) {
    std::sort(members.begin(), members.end(), [](const QPV* a, const QPV* b) {
      return a->timestamp_ms < b->timestamp_ms;
    });
    for (std::size_t i = 1; i < members.size(); ++i) {
      if (members[i]->timestamp_ms == members[i - 1]->timestamp_ms) {
        throw DataError("session '" + sid + "': qpvs '" +
                        members[i - 1]->qpv_id + "' and '" + members[i]->qpv_id +
                        "' share timestamp " +
                        std::to_string(members[i]->timestamp_ms));
      }
      if (members[i - 1]->reformulated && !members[i]->reformulated) {
        pairs.push_back({members[i - 1], members[i]});
      }
    }
  }
  return pairs;
}

StatsReport compute_stats(std::span<const QPV> qpvs) {
  if (qpvs.empty()) throw DataError("compute_stats: empty input");
  StatsReport r;
  r.num_qpvs = static_cast<std::int64_t>(qpvs.size());

  struct Counts {
    std::int64_t total = 0;
    std::int64_t negative = 0;
  };
  std::map<std::string, Counts> per_query;
  std::map<int, Counts> per_size;
  std::map<std::pair<std::string, std::vector<std::string>>, Counts> per_group;
  std::set<std::string> card_types;

  for (const auto& q : qpvs) {
    const int neg = q.reformulated ? 1 : 0;
    auto& pq = per_query[q.query];
    pq.total++;
    pq.negative += neg;
    auto& ps = per_size[static_cast<int>(q.cards.size())];
    ps.total++;
    ps.negative += neg;
    auto& pg = per_group[{q.query, q.ranking()}];
    pg.total++;
    pg.negative += neg;
    for (const auto& c : q.cards) card_types.insert(c.card_type);
  }
  r.num_distinct_queries = static_cast<std::int64_t>(per_query.size());
  r.num_card_types = static_cast<std::int64_t>(card_types.size());

  for (const auto& [query, c] : per_query) {
    // Integer decile avoids 0.3 * 10 landing just below 3.
    const int decile = static_cast<int>((10 * c.negative) / c.total);
    r.reformulation_ratio_histogram[decile]++;
  }
  auto split = [](const Counts& c) {
    LabelSplit s;
    s.negative_pct = 100.0 * static_cast<double>(c.negative) / static_cast<double>(c.total);
    s.positive_pct = 100.0 - s.negative_pct;
    return s;
  };
  for (const auto& [size, c] : per_size) {
    r.cards_per_qpv_distribution[size] =
        100.0 * static_cast<double>(c.total) / static_cast<double>(r.num_qpvs);
    r.label_split_per_card_count[size] = split(c);
  }
  for (const auto& [key, c] : per_group) r.card_group_label_split[key] = split(c);
  return r;
}

std::string stats_to_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  j["num_qpvs"] = r.num_qpvs;
  j["num_distinct_queries"] = r.num_distinct_queries;
  j["num_card_types"] = r.num_card_types;
  auto& hist = j["reformulation_ratio_histogram"] = nlohmann::ordered_json::array();
  for (const auto& [decile, count] : r.reformulation_ratio_histogram) {
    hist.push_back({{"ratio_bucket", decile / 10.0}, {"queries", count}});
  }
  auto& dist = j["cards_per_qpv_distribution"] = nlohmann::ordered_json::array();
  for (const auto& [size, pct] : r.cards_per_qpv_distribution) {
    const auto& s = r.label_split_per_card_count.at(size);
    dist.push_back({{"num_cards", size},
                    {"qpv_pct", pct},
                    {"positive_pct", s.positive_pct},
                    {"negative_pct", s.negative_pct}});
  }
  auto& groups = j["card_groups"] = nlohmann::ordered_json::array();
  for (const auto& [key, s] : r.card_group_label_split) {
    groups.push_back({{"query", key.first},
                      {"ranking", key.second},
                      {"positive_pct", s.positive_pct},
                      {"negative_pct", s.negative_pct}});
  }
  return j.dump(2);
}

}  // namespace cardrank
