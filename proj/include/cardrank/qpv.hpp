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
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cardrank {

struct CardObservation {
  std::string card_type;
  int rank = 1;  // 1-based
  bool viewed = false;
  bool clicked = false;
  int num_links = 0;
  int num_link_clicks = 0;

  bool operator==(const CardObservation&) const = default;
};

// One query-page-view. `cards` is kept sorted by rank; `reformulated` is the
// outcome read from the log (true means the user reissued the query).
struct QPV {
  std::string qpv_id;
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  std::string query;
  std::vector<CardObservation> cards;
  bool reformulated = false;

  // +1 when satisfied, -1 when reformulated.
  int outcome() const { return reformulated ? -1 : +1; }
  std::vector<std::string> ranking() const;
  const CardObservation* find(const std::string& card_type) const;

  bool operator==(const QPV&) const = default;
};

// The terminal (reformulated, satisfied) adjacency of a reformulation chain.
// Both pointers refer into the sequence given to chain_sessions().
struct ReformulationPair {
  const QPV* prior = nullptr;
  const QPV* successor = nullptr;
};

// Checks the per-QPV invariants; throws DataError naming the qpv_id.
void validate_qpv(const QPV& qpv);

// Line-delimited JSON log. Blank lines are skipped, unknown fields ignored.
// Cards come back sorted by rank.
std::vector<QPV> parse_qpv_log(std::istream& in);
QPV parse_qpv_line(const std::string& line, std::size_t line_no);

std::string serialize_qpv(const QPV& qpv);
void write_qpv_log(std::ostream& out, std::span<const QPV> qpvs);

// Sorts each session by timestamp and emits a pair for every adjacent
// (reformulated, not reformulated) step. Earlier members of a longer chain
// produce nothing. Output is ordered by (session_id, timestamp).
std::vector<ReformulationPair> chain_sessions(std::span<const QPV> qpvs);

struct LabelSplit {
  double positive_pct = 0.0;
  double negative_pct = 0.0;
};

struct StatsReport {
  std::int64_t num_qpvs = 0;
  std::int64_t num_distinct_queries = 0;
  std::int64_t num_card_types = 0;
  // Keyed by decile of the per-query reformulated ratio: key k covers
  // [k/10, (k+1)/10), key 10 holds ratio exactly 1.
  std::map<int, std::int64_t> reformulation_ratio_histogram;
  std::map<int, double> cards_per_qpv_distribution;  // card count -> %
  std::map<int, LabelSplit> label_split_per_card_count;
  std::map<std::pair<std::string, std::vector<std::string>>, LabelSplit>
      card_group_label_split;
};

StatsReport compute_stats(std::span<const QPV> qpvs);
std::string stats_to_json(const StatsReport& report);

}  // namespace cardrank
