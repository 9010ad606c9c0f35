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

#include "cardrank/ltl.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cardrank/error.hpp"

namespace cardrank {

namespace {

// ln(1 + exp(x)) without overflow.
double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LtlObjective::LtlObjective(std::span<const QPV> qpvs, double l2_lambda) : l2_(l2_lambda) {
  if (l2_lambda < 0) throw DataError("l2_lambda must be non-negative");
  std::set<std::string> cards;
  for (const auto& q : qpvs) {
    for (const auto& c : q.cards) cards.insert(c.card_type);
  }
  cards_.assign(cards.begin(), cards.end());
  const std::size_t k = cards_.size();
  auto index_of = [&](const std::string& card) {
    return static_cast<std::size_t>(
        std::lower_bound(cards_.begin(), cards_.end(), card) - cards_.begin());
  };

  offsets_.push_back(0);
  for (const auto& q : qpvs) {
    targets_.push_back(q.reformulated ? -1.0 : +1.0);
    for (const auto& c : q.cards) {
      const std::size_t idx = index_of(c.card_type);
      if (c.clicked) active_.push_back(1 + idx);
      if (c.viewed) active_.push_back(1 + k + idx);
    }
    offsets_.push_back(active_.size());
  }
}

double LtlObjective::value(std::span<const double> theta) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    double z = theta[0];
    for (std::size_t a = offsets_[i]; a < offsets_[i + 1]; ++a) z += theta[active_[a]];
    loss += softplus(-targets_[i] * z);
  }
  double norm2 = 0.0;
  for (double t : theta) norm2 += t * t;
  return loss + l2_ * norm2;
}

double LtlObjective::value_and_gradient(std::span<const double> theta,
                                        std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    double z = theta[0];
    for (std::size_t a = offsets_[i]; a < offsets_[i + 1]; ++a) z += theta[active_[a]];
    const double y = targets_[i];
    loss += softplus(-y * z);
    const double dz = -y * sigmoid(-y * z);
    grad[0] += dz;
    for (std::size_t a = offsets_[i]; a < offsets_[i + 1]; ++a) grad[active_[a]] += dz;
  }
  double norm2 = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    norm2 += theta[j] * theta[j];
    grad[j] += 2.0 * l2_ * theta[j];
  }
  return loss + l2_ * norm2;
}

double LtlObjective::change(std::span<const double> from, std::span<const double> to) const {
  // Per-row differences of softplus terms, so that tiny decreases near the
  // optimum are not lost to the rounding of the full objective.
  std::vector<double> step(from.size());
  for (std::size_t j = 0; j < from.size(); ++j) step[j] = to[j] - from[j];
  double delta = 0.0;
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    double z = from[0], dz = step[0];
    for (std::size_t a = offsets_[i]; a < offsets_[i + 1]; ++a) {
      z += from[active_[a]];
      dz += step[active_[a]];
    }
    const double a0 = -targets_[i] * z;
    delta += std::log1p(sigmoid(a0) * std::expm1(-targets_[i] * dz));
  }
  for (std::size_t j = 0; j < from.size(); ++j) {
    delta += l2_ * (to[j] - from[j]) * (to[j] + from[j]);
  }
  return delta;
}

LtlModel fit_ltl(std::span<const QPV> qpvs, const FitConfig& config,
                 std::vector<double>* objective_trace) {
  if (qpvs.empty()) throw DataError("fit_ltl: no QPVs");
  for (const auto& q : qpvs) {
    if (q.query != qpvs.front().query) {
      throw DataError("fit_ltl: mixed query terms '" + qpvs.front().query + "' and '" +
                      q.query + "'");
    }
  }
  if (config.max_iterations < 0 || !(config.gradient_tolerance > 0) ||
      !(config.initial_step > 0)) {
    throw DataError("fit_ltl: invalid FitConfig");
  }

  const LtlObjective objective(qpvs, config.l2_lambda);
  const std::size_t dim = objective.dimension();
  std::vector<double> theta(dim, 0.0), grad(dim), trial(dim), trial_grad(dim);
  double f = objective.value_and_gradient(theta, grad);
  if (objective_trace) objective_trace->push_back(f);

  double step = config.initial_step;
  int iter = 0;
  bool converged = max_abs(grad) < config.gradient_tolerance;
  while (!converged && iter < config.max_iterations) {
    double g2 = 0.0;
    for (double g : grad) g2 += g * g;
    bool accepted = false;
    double delta = 0.0;
    // Backtrack until the Armijo condition holds.
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t j = 0; j < dim; ++j) trial[j] = theta[j] - step * grad[j];
      delta = objective.change(theta, trial);
      if (delta <= -config.armijo_c * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow: no further progress possible
    objective.value_and_gradient(trial, trial_grad);
    // Barzilai-Borwein estimate of the next trial step from the last move.
    double sy = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double s = trial[j] - theta[j];
      sy += s * (trial_grad[j] - grad[j]);
      ss += s * s;
    }
    step = sy > 0.0 ? ss / sy : 2.0 * step;
    theta.swap(trial);
    grad.swap(trial_grad);
    f += delta;
    if (objective_trace) objective_trace->push_back(f);
    ++iter;
    converged = max_abs(grad) < config.gradient_tolerance;
  }

  LtlModel model;
  model.query = qpvs.front().query;
  model.bias = theta[0];
  const auto& cards = objective.cards();
  for (std::size_t k = 0; k < cards.size(); ++k) {
    model.click_weight[cards[k]] = theta[1 + k];
    model.view_weight[cards[k]] = theta[1 + cards.size() + k];
  }
  model.num_qpvs_fit = static_cast<int>(qpvs.size());
  model.low_confidence = model.num_qpvs_fit < LtlModel::kMinConfidentQpvs;
  model.converged = converged;
  model.iterations = iter;
  return model;
}

namespace {

std::vector<std::vector<QPV>> group_by_query(std::span<const QPV> qpvs) {
  std::map<std::string, std::vector<QPV>> groups;
  for (const auto& q : qpvs) groups[q.query].push_back(q);
  std::vector<std::vector<QPV>> out;
  out.reserve(groups.size());
  for (auto& [query, group] : groups) out.push_back(std::move(group));
  return out;
}

}  // namespace

std::vector<LtlModel> fit_ltl_all(std::span<const QPV> qpvs, const FitConfig& config) {
  const auto groups = group_by_query(qpvs);
  std::vector<LtlModel> models(groups.size());
  const long n = static_cast<long>(groups.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) models[i] = fit_ltl(groups[i], config);
  return models;
}

std::vector<LtlModel> fit_ltl_all_serial(std::span<const QPV> qpvs,
                                         const FitConfig& config) {
  std::vector<LtlModel> models;
  for (const auto& group : group_by_query(qpvs)) models.push_back(fit_ltl(group, config));
  return models;
}

std::vector<CardLabel> ltl_qpv_labels(const LtlModel& model, const QPV& qpv) {
  if (model.query != qpv.query) {
    throw DataError("ltl model for '" + model.query + "' applied to query '" + qpv.query +
                    "'");
  }
  std::vector<CardLabel> out;
  for (const auto& c : qpv.cards) {
    auto click = model.click_weight.find(c.card_type);
    auto view = model.view_weight.find(c.card_type);
    const bool cold = click == model.click_weight.end() || view == model.view_weight.end();
    double label = 0.0;
    if (!cold) {
      label = (c.viewed ? view->second : 0.0) + (c.clicked ? click->second : 0.0);
    }
    out.push_back({qpv.qpv_id, qpv.query, c.card_type, label, Strategy::kLTL, cold});
  }
  return out;
}

std::vector<CardLabel> ltl_labels(std::span<const LtlModel> models,
                                  std::span<const QPV> qpvs) {
  std::map<std::string, const LtlModel*> by_query;
  for (const auto& m : models) by_query[m.query] = &m;
  std::vector<const QPV*> ordered;
  for (const auto& q : qpvs) ordered.push_back(&q);
  std::sort(ordered.begin(), ordered.end(),
            [](const QPV* a, const QPV* b) { return a->qpv_id < b->qpv_id; });
  std::vector<CardLabel> out;
  for (const QPV* q : ordered) {
    auto it = by_query.find(q->query);
    if (it != by_query.end()) {
      auto labels = ltl_qpv_labels(*it->second, *q);
      out.insert(out.end(), labels.begin(), labels.end());
    } else {
      for (const auto& c : q->cards) {
        out.push_back({q->qpv_id, q->query, c.card_type, 0.0, Strategy::kLTL, true});
      }
    }
  }
  return out;
}

CardValue make_card_value(std::string card_type, double click_weight, double click_mean,
                          double view_weight, double view_mean) {
  CardValue v;
  v.card_type = std::move(card_type);
  v.click_weight = click_weight;
  v.click_mean = click_mean;
  v.click_value = click_weight * click_mean;
  v.view_weight = view_weight;
  v.view_mean = view_mean;
  v.view_value = view_weight * view_mean;
  v.total_value = v.click_value + v.view_value;
  return v;
}

CardValueReport ltl_card_values(const LtlModel& model, std::span<const QPV> qpvs) {
  std::map<std::string, std::pair<double, double>> counts;  // clicks, views
  for (const auto& q : qpvs) {
    if (q.query != model.query) {
      throw DataError("ltl_card_values: QPV '" + q.qpv_id + "' has query '" + q.query +
                      "', model is for '" + model.query + "'");
    }
    for (const auto& c : q.cards) {
      auto& cnt = counts[c.card_type];
      cnt.first += c.clicked ? 1.0 : 0.0;
      cnt.second += c.viewed ? 1.0 : 0.0;
    }
  }
  const double n = static_cast<double>(qpvs.size());
  CardValueReport report;
  report.query = model.query;
  for (const auto& [card, click_w] : model.click_weight) {
    double click_mean = 0.0, view_mean = 0.0;
    if (auto it = counts.find(card); it != counts.end() && n > 0) {
      click_mean = it->second.first / n;
      view_mean = it->second.second / n;
    }
    report.cards.push_back(
        make_card_value(card, click_w, click_mean, model.view_weight.at(card), view_mean));
  }
  std::stable_sort(report.cards.begin(), report.cards.end(),
                   [](const CardValue& a, const CardValue& b) {
                     return a.total_value > b.total_value;
                   });
  return report;
}

std::string serialize(const LtlModel& m) {
  nlohmann::ordered_json j;
  j["query"] = m.query;
  j["bias"] = m.bias;
  j["click_weight"] = m.click_weight;
  j["view_weight"] = m.view_weight;
  j["converged"] = m.converged;
  j["num_qpvs_fit"] = m.num_qpvs_fit;
  j["low_confidence"] = m.low_confidence;
  j["iterations"] = m.iterations;
  return j.dump();
}

void write_ltl_models(std::ostream& out, std::span<const LtlModel> models) {
  for (const auto& m : models) out << serialize(m) << '\n';
}

std::vector<LtlModel> read_ltl_models(std::istream& in) {
  std::vector<LtlModel> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LtlModel m;
      m.query = j.at("query").get<std::string>();
      m.bias = j.at("bias").get<double>();
      m.click_weight = j.at("click_weight").get<std::map<std::string, double>>();
      m.view_weight = j.at("view_weight").get<std::map<std::string, double>>();
      m.converged = j.at("converged").get<bool>();
      m.num_qpvs_fit = j.at("num_qpvs_fit").get<int>();
      m.low_confidence = j.value("low_confidence", m.num_qpvs_fit < LtlModel::kMinConfidentQpvs);
      m.iterations = j.value("iterations", 0);
      std::set<std::string> a, b;
      for (const auto& [k, v] : m.click_weight) a.insert(k);
      for (const auto& [k, v] : m.view_weight) b.insert(k);
      if (a != b) throw ParseError(line_no, "click_weight and view_weight keys differ");
      out.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

void write_value_report(std::ostream& out, std::span<const CardValueReport> reports) {
  out << "query\tcard\tclick_value\tclick_weight\tclick_mean\tview_value\tview_weight\t"
         "view_mean\ttotal_value\n";
  char buf[256];
  for (const auto& r : reports) {
    for (const auto& c : r.cards) {
      std::snprintf(buf, sizeof(buf), "%.4f\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f",
                    c.click_value, c.click_weight, c.click_mean, c.view_value,
                    c.view_weight, c.view_mean, c.total_value);
      out << r.query << '\t' << c.card_type << '\t' << buf << '\n';
    }
  }
}

}  // namespace cardrank
