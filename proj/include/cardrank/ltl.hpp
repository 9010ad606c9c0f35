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
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cardrank/labeling.hpp"
#include "cardrank/qpv.hpp"

namespace cardrank {

// Per-query-term logistic credit model. A card's credit in one QPV is
// viewed * view_weight + clicked * click_weight.
struct LtlModel {
  std::string query;
  double bias = 0.0;
  std::map<std::string, double> click_weight;
  std::map<std::string, double> view_weight;
  int num_qpvs_fit = 0;
  bool converged = false;
  bool low_confidence = false;  // fewer than kMinConfidentQpvs QPVs
  int iterations = 0;

  static constexpr int kMinConfidentQpvs = 5;
};

struct FitConfig {
  double l2_lambda = 0.01;
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  double initial_step = 1.0;
  double armijo_c = 1e-4;
};

// Regularized logistic loss of one query term:
//   sum_i ln(1 + exp(-y_i z_i)) + l2 * |theta|^2
// Parameters are laid out as [bias, click_0..click_{K-1}, view_0..view_{K-1}]
// with cards in lexicographic order.
class LtlObjective {
 public:
  LtlObjective(std::span<const QPV> qpvs, double l2_lambda);

  std::size_t dimension() const { return 1 + 2 * cards_.size(); }
  const std::vector<std::string>& cards() const { return cards_; }
  std::size_t num_rows() const { return targets_.size(); }

  double value(std::span<const double> theta) const;
  // Returns the objective and writes its gradient into `grad`.
  double value_and_gradient(std::span<const double> theta, std::span<double> grad) const;
  // value(to) - value(from), accurate even when the two are nearly equal.
  double change(std::span<const double> from, std::span<const double> to) const;

 private:
  std::vector<std::string> cards_;
  std::vector<double> targets_;       // +1 / -1 per QPV
  std::vector<std::size_t> offsets_;  // CSR row starts into active_
  std::vector<std::size_t> active_;   // parameter indices with feature 1
  double l2_;
};

// Fits one query term by gradient descent with Armijo backtracking. When
// `objective_trace` is given, the objective after every accepted step is
// appended (the first entry is the starting point).
LtlModel fit_ltl(std::span<const QPV> qpvs_of_one_query, const FitConfig& config = {},
                 std::vector<double>* objective_trace = nullptr);

// One model per distinct query, sorted by query. Fits run in parallel; the
// serial variant is the reference used in tests and benchmarks.
std::vector<LtlModel> fit_ltl_all(std::span<const QPV> qpvs, const FitConfig& config = {});
std::vector<LtlModel> fit_ltl_all_serial(std::span<const QPV> qpvs,
                                         const FitConfig& config = {});

std::vector<CardLabel> ltl_qpv_labels(const LtlModel& model, const QPV& qpv);

// Labels for every QPV whose query has a model; QPVs without a model get
// cold-card labels of 0.
std::vector<CardLabel> ltl_labels(std::span<const LtlModel> models,
                                  std::span<const QPV> qpvs);

struct CardValue {
  std::string card_type;
  double click_value = 0.0;
  double click_weight = 0.0;
  double click_mean = 0.0;
  double view_value = 0.0;
  double view_weight = 0.0;
  double view_mean = 0.0;
  double total_value = 0.0;
};

// Builds a row from weights and means using the expected-credit identities.
CardValue make_card_value(std::string card_type, double click_weight, double click_mean,
                          double view_weight, double view_mean);

struct CardValueReport {
  std::string query;
  std::vector<CardValue> cards;  // sorted by total_value, descending
};

CardValueReport ltl_card_values(const LtlModel& model,
                                std::span<const QPV> qpvs_of_one_query);

std::string serialize(const LtlModel& model);
void write_ltl_models(std::ostream& out, std::span<const LtlModel> models);
std::vector<LtlModel> read_ltl_models(std::istream& in);

// TSV with the columns card, click value/weight/mean, view value/weight/mean,
// total value.
void write_value_report(std::ostream& out, std::span<const CardValueReport> reports);

}  // namespace cardrank
