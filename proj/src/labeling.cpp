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

#include "cardrank/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cardrank/error.hpp"

namespace cardrank {

using ojson = nlohmann::ordered_json;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kNPL: return "npl";
    case Strategy::kDPL: return "dpl";
    case Strategy::kMPL: return "mpl";
    case Strategy::kAPL: return "apl";
    case Strategy::kLL: return "ll";
    case Strategy::kLTL: return "ltl";
    case Strategy::kCTR: return "ctr";
    case Strategy::kHuman: return "human";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (auto s : {Strategy::kNPL, Strategy::kDPL, Strategy::kMPL, Strategy::kAPL,
                 Strategy::kLL, Strategy::kLTL, Strategy::kCTR, Strategy::kHuman}) {
    if (to_string(s) == lower) return s;
  }
  throw DataError("unknown strategy '" + name + "'");
}

namespace {

std::vector<const QPV*> canonical(std::span<const QPV> qpvs) {
  std::vector<const QPV*> out;
  out.reserve(qpvs.size());
  for (const auto& q : qpvs) out.push_back(&q);
  std::sort(out.begin(), out.end(),
            [](const QPV* a, const QPV* b) { return a->qpv_id < b->qpv_id; });
  return out;
}

// qpv -> outcome sign for the NPL/DPL emission rule.
std::map<std::string, int> pointwise_targets(std::span<const QPV> qpvs,
                                             std::span<const ReformulationPair> pairs,
                                             PointwiseOptions options) {
  std::map<std::string, int> sign;
  if (options.positives == PositiveRule::kAll) {
    for (const auto& q : qpvs) {
      if (!q.reformulated) sign[q.qpv_id] = +1;
    }
  }
  for (const auto& p : pairs) {
    sign[p.prior->qpv_id] = -1;
    if (options.positives == PositiveRule::kPostReform) sign[p.successor->qpv_id] = +1;
  }
  return sign;
}

template <typename Weight>
std::vector<CardLabel> pointwise(std::span<const QPV> qpvs,
                                 std::span<const ReformulationPair> pairs,
                                 PointwiseOptions options, Strategy strategy,
                                 Weight weight) {
  const auto sign = pointwise_targets(qpvs, pairs, options);
  std::vector<CardLabel> out;
  for (const QPV* q : canonical(qpvs)) {
    auto it = sign.find(q->qpv_id);
    if (it == sign.end()) continue;
    for (const auto& c : q->cards) {
      out.push_back({q->qpv_id, q->query, c.card_type, it->second * weight(c.rank),
                     strategy, false});
    }
  }
  return out;
}

}  // namespace

std::vector<CardLabel> label_naive_pointwise(std::span<const QPV> qpvs,
                                             std::span<const ReformulationPair> pairs,
                                             PointwiseOptions options) {
  return pointwise(qpvs, pairs, options, Strategy::kNPL, [](int) { return 1.0; });
}

std::vector<CardLabel> label_discounted_pointwise(
    std::span<const QPV> qpvs, std::span<const ReformulationPair> pairs,
    PointwiseOptions options) {
  return pointwise(qpvs, pairs, options, Strategy::kDPL, [](int rank) {
    return 1.0 / std::log(1.0 + static_cast<double>(rank));
  });
}

std::vector<CardLabel> label_movement_pointwise(std::span<const ReformulationPair> pairs,
                                                const MovementConfig& config) {
  if (!(config.d_plus > 0.0) || !(config.d_minus < 0.0)) {
    throw DataError("movement config requires d_plus > 0 and d_minus < 0");
  }
  std::vector<ReformulationPair> ordered(pairs.begin(), pairs.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return a.successor->qpv_id < b.successor->qpv_id;
  });

  std::vector<CardLabel> out;
  for (const auto& p : ordered) {
    const QPV& next = *p.successor;
    auto emit = [&](const std::string& card, double value) {
      out.push_back({next.qpv_id, next.query, card, value, Strategy::kMPL, false});
    };
    for (const auto& c : next.cards) {
      const CardObservation* before = p.prior->find(c.card_type);
      emit(c.card_type, before ? static_cast<double>(before->rank - c.rank) : config.d_plus);
    }
    for (const auto& c : p.prior->cards) {
      if (next.find(c.card_type) == nullptr) emit(c.card_type, config.d_minus);
    }
  }
  return out;
}

std::vector<PairLabel> label_pairwise(std::span<const QPV> qpvs) {
  std::vector<PairLabel> out;
  for (const QPV* q : canonical(qpvs)) {
    const auto& cards = q->cards;
    for (std::size_t i = 0; i < cards.size(); ++i) {
      for (std::size_t j = i + 1; j < cards.size(); ++j) {
        out.push_back({q->qpv_id, q->query, cards[i].card_type, cards[j].card_type,
                       q->outcome()});
      }
    }
  }
  return out;
}

std::vector<CardLabel> label_approx_pairwise(std::span<const QPV> qpvs,
                                             ApproxPairwiseOptions options) {
  std::vector<CardLabel> out;
  for (const QPV* q : canonical(qpvs)) {
    const auto& cards = q->cards;
    const int sign = options.example_signs ? +1 : q->outcome();
    std::vector<double> combined(cards.size(), 0.0);
    for (std::size_t i = 0; i < cards.size(); ++i) {
      for (std::size_t j = i + 1; j < cards.size(); ++j) {
        if (options.combine) {
          combined[i] += sign;
          combined[j] -= sign;
        } else {
          out.push_back({q->qpv_id, q->query, cards[i].card_type,
                         static_cast<double>(sign), Strategy::kAPL, false});
          out.push_back({q->qpv_id, q->query, cards[j].card_type,
                         static_cast<double>(-sign), Strategy::kAPL, false});
        }
      }
    }
    if (options.combine) {
      for (std::size_t i = 0; i < cards.size(); ++i) {
        out.push_back({q->qpv_id, q->query, cards[i].card_type, combined[i],
                       Strategy::kAPL, false});
      }
    }
  }
  return out;
}

std::vector<ListLabel> label_listwise(std::span<const QPV> qpvs) {
  std::vector<ListLabel> out;
  for (const QPV* q : canonical(qpvs)) {
    out.push_back({q->qpv_id, q->query, q->ranking(), q->outcome()});
  }
  return out;
}

std::vector<CardLabel> label_ctr(std::span<const QPV> qpvs) {
  struct Pool {
    long long link_clicks = 0;
    long long links = 0;
  };
  std::map<std::pair<std::string, std::string>, Pool> pools;
  for (const auto& q : qpvs) {
    for (const auto& c : q.cards) {
      auto& p = pools[{q.query, c.card_type}];
      p.link_clicks += c.num_link_clicks;
      p.links += c.num_links;
    }
  }
  std::vector<CardLabel> out;
  for (const QPV* q : canonical(qpvs)) {
    for (const auto& c : q->cards) {
      const auto& p = pools.at({q->query, c.card_type});
      const double ctr = p.links > 0 ? static_cast<double>(p.link_clicks) /
                                           static_cast<double>(p.links)
                                     : 0.0;
      out.push_back({q->qpv_id, q->query, c.card_type, ctr, Strategy::kCTR, false});
    }
  }
  return out;
}

std::string to_string(Grade g) {
  switch (g) {
    case Grade::kExcellent: return "Excellent";
    case Grade::kGood: return "Good";
    case Grade::kNeutral: return "Neutral";
    case Grade::kPoor: return "Poor";
    case Grade::kVeryPoor: return "Very Poor";
  }
  return "?";
}

Grade parse_grade(const std::string& text) {
  for (auto g : {Grade::kExcellent, Grade::kGood, Grade::kNeutral, Grade::kPoor,
                 Grade::kVeryPoor}) {
    if (to_string(g) == text) return g;
  }
  throw DataError("unknown grade '" + text + "'");
}

double grade_value(Grade g) {
  switch (g) {
    case Grade::kExcellent: return 2.0;
    case Grade::kGood: return 1.0;
    case Grade::kNeutral: return 0.0;
    case Grade::kPoor: return -1.0;
    case Grade::kVeryPoor: return -2.0;
  }
  return 0.0;
}

std::vector<CardLabel> import_human_judgments(std::istream& in) {
  std::vector<CardLabel> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 3) {
      throw ParseError(line_no, "expected 3 tab-separated columns, got " +
                                    std::to_string(cols.size()));
    }
    Grade grade;
    try {
      grade = parse_grade(cols[2]);
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back({"", cols[0], cols[1], grade_value(grade), Strategy::kHuman, false});
  }
  return out;
}

std::string serialize(const CardLabel& l) {
  ojson j;
  j["qpv_id"] = l.qpv_id;
  j["query"] = l.query;
  j["card_type"] = l.card_type;
  j["label"] = l.label;
  j["strategy"] = to_string(l.strategy);
  if (l.cold_card) j["cold_card"] = true;
  return j.dump();
}

std::string serialize(const PairLabel& l) {
  ojson j;
  j["qpv_id"] = l.qpv_id;
  j["query"] = l.query;
  j["preferred"] = l.preferred;
  j["other"] = l.other;
  j["label"] = l.label;
  j["strategy"] = "pairwise";
  return j.dump();
}

std::string serialize(const ListLabel& l) {
  ojson j;
  j["qpv_id"] = l.qpv_id;
  j["query"] = l.query;
  j["ranking"] = l.ranking;
  j["label"] = l.label;
  j["strategy"] = "ll";
  return j.dump();
}

void write_labels(std::ostream& out, std::span<const CardLabel> labels) {
  for (const auto& l : labels) out << serialize(l) << '\n';
}
void write_labels(std::ostream& out, std::span<const PairLabel> labels) {
  for (const auto& l : labels) out << serialize(l) << '\n';
}
void write_labels(std::ostream& out, std::span<const ListLabel> labels) {
  for (const auto& l : labels) out << serialize(l) << '\n';
}

LabelSet read_labels(std::istream& in) {
  LabelSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto strategy = j.at("strategy").get<std::string>();
      if (j.contains("ranking")) {
        set.list.push_back({j.at("qpv_id"), j.at("query"),
                            j.at("ranking").get<std::vector<std::string>>(),
                            j.at("label").get<int>()});
      } else if (j.contains("preferred")) {
        set.pair.push_back({j.at("qpv_id"), j.at("query"), j.at("preferred"),
                            j.at("other"), j.at("label").get<int>()});
      } else {
        set.card.push_back({j.at("qpv_id"), j.at("query"), j.at("card_type"),
                            j.at("label").get<double>(), parse_strategy(strategy),
                            j.value("cold_card", false)});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  const int kinds = !set.card.empty() + !set.pair.empty() + !set.list.empty();
  if (kinds > 1) throw DataError("label file mixes pointwise, pairwise and listwise labels");
  return set;
}

}  // namespace cardrank
