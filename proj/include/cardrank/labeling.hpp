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

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cardrank/qpv.hpp"

namespace cardrank {

enum class Strategy { kNPL, kDPL, kMPL, kAPL, kLL, kLTL, kCTR, kHuman };

// Lowercase names as used on the command line (npl, dpl, ..., human).
std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

struct CardLabel {
  std::string qpv_id;  // empty for query-level labels (human judgments)
  std::string query;
  std::string card_type;
  double label = 0.0;
  Strategy strategy = Strategy::kNPL;
  // Set by learning-to-label when the card had no fitted weights.
  bool cold_card = false;

  bool operator==(const CardLabel&) const = default;
};

// `preferred` was ranked above `other` in the source QPV.
struct PairLabel {
  std::string qpv_id;
  std::string query;
  std::string preferred;
  std::string other;
  int label = +1;

  bool operator==(const PairLabel&) const = default;
};

struct ListLabel {
  std::string qpv_id;
  std::string query;
  std::vector<std::string> ranking;
  int label = +1;

  bool operator==(const ListLabel&) const = default;
};

// Values given to cards that appear in (d_plus) or drop out of (d_minus) the
// successor page of a reformulation.
struct MovementConfig {
  double d_plus = +1.0;
  double d_minus = -1.0;
};

// Which satisfied QPVs receive positive pointwise labels.
enum class PositiveRule {
  kAll,          // every QPV that was not reformulated
  kPostReform,   // only the successor of a reformulation pair
};

struct PointwiseOptions {
  PositiveRule positives = PositiveRule::kAll;
};

// All label producers return labels in a canonical order (qpv_id, then rank)
// so the output does not depend on input order.

std::vector<CardLabel> label_naive_pointwise(
    std::span<const QPV> qpvs, std::span<const ReformulationPair> pairs,
    PointwiseOptions options = {});

// Same emission set as the naive strategy, label = outcome / ln(1 + rank).
std::vector<CardLabel> label_discounted_pointwise(
    std::span<const QPV> qpvs, std::span<const ReformulationPair> pairs,
    PointwiseOptions options = {});

// Labels land on the successor QPV: rank(prior) - rank(successor) for cards
// on both pages, d_plus for new cards, d_minus for dropped ones.
std::vector<CardLabel> label_movement_pointwise(
    std::span<const ReformulationPair> pairs, const MovementConfig& config = {});

std::vector<PairLabel> label_pairwise(std::span<const QPV> qpvs);

struct ApproxPairwiseOptions {
  bool combine = true;
  // Reproduces the published worked example, where negative pairs are broken
  // down with the positive-pair signs.
  bool example_signs = false;
};

std::vector<CardLabel> label_approx_pairwise(std::span<const QPV> qpvs,
                                             ApproxPairwiseOptions options = {});

std::vector<ListLabel> label_listwise(std::span<const QPV> qpvs);

// Pooled link CTR per (query, card_type), repeated on every QPV showing the
// card. Cards without links score 0.
std::vector<CardLabel> label_ctr(std::span<const QPV> qpvs);

enum class Grade { kExcellent, kGood, kNeutral, kPoor, kVeryPoor };

std::string to_string(Grade g);
Grade parse_grade(const std::string& text);
double grade_value(Grade g);

// Three-column TSV: query, card_type, grade.
std::vector<CardLabel> import_human_judgments(std::istream& in);

// Label files: one JSON object per line.
std::string serialize(const CardLabel& l);
std::string serialize(const PairLabel& l);
std::string serialize(const ListLabel& l);

void write_labels(std::ostream& out, std::span<const CardLabel> labels);
void write_labels(std::ostream& out, std::span<const PairLabel> labels);
void write_labels(std::ostream& out, std::span<const ListLabel> labels);

// Reads any label file; exactly one of the vectors is filled.
struct LabelSet {
  std::vector<CardLabel> card;
  std::vector<PairLabel> pair;
  std::vector<ListLabel> list;
};
LabelSet read_labels(std::istream& in);

}  // namespace cardrank
