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

#include "cardrank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

#include <json.hpp>

#include "cardrank/error.hpp"
#include "cardrank/io.hpp"

namespace cardrank {

MetricsReport make_metrics(long long n_positive, long long matched_positive,
                           long long n_negative, long long matched_negative) {
  MetricsReport m;
  m.n_positive = n_positive;
  m.n_negative = n_negative;
  m.matched_positive = matched_positive;
  m.matched_negative = matched_negative;
  m.tpr = n_positive > 0 ? static_cast<double>(matched_positive) / n_positive : 0.0;
  m.tnr = n_negative > 0 ? static_cast<double>(matched_negative) / n_negative : 0.0;
  const double denom = m.tpr + (1.0 - m.tnr);
  m.f_measure = denom > 0.0 ? 2.0 * m.tpr * (1.0 - m.tnr) / denom : 0.0;
  return m;
}

MetricsReport evaluate(const std::map<std::string, PredictedRanking>& predictions,
                       std::span<const QPV> qpvs) {
  for (const auto& q : qpvs) {
    if (!predictions.count(q.qpv_id)) {
      throw DataError("no prediction for qpv '" + q.qpv_id + "'");
    }
  }
  long long np = 0, mp = 0, nn = 0, mn = 0;
  const long n = static_cast<long>(qpvs.size());
#pragma omp parallel for reduction(+ : np, mp, nn, mn) schedule(static)
  for (long i = 0; i < n; ++i) {
    const QPV& q = qpvs[i];
    const auto& predicted = predictions.at(q.qpv_id).ranking;
    bool match = predicted.size() == q.cards.size();
    for (std::size_t k = 0; match && k < predicted.size(); ++k) {
      match = predicted[k] == q.cards[k].card_type;
    }
    if (q.reformulated) {
      ++nn;
      mn += match;
    } else {
      ++np;
      mp += match;
    }
  }
  return make_metrics(np, mp, nn, mn);
}

int fold_of(const std::string& query, const CvConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : query) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= config.seed + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<int>(h % static_cast<std::uint64_t>(config.num_folds));
}

namespace {

struct Split {
  std::vector<std::size_t> train;  // indices into the log
  std::vector<std::size_t> test;
  std::set<std::string> train_queries;
  std::set<std::string> test_queries;
};

std::vector<Split> make_splits(std::span<const QPV> qpvs, const CvConfig& config) {
  if (config.num_folds < 2) throw DataError("num_folds must be at least 2");
  std::vector<Split> splits(static_cast<std::size_t>(config.num_folds));
  std::map<std::string, int> fold_cache;
  for (std::size_t i = 0; i < qpvs.size(); ++i) {
    const QPV& q = qpvs[i];
    auto [it, fresh] = fold_cache.try_emplace(q.query, 0);
    if (fresh) it->second = fold_of(q.query, config);
    for (int f = 0; f < config.num_folds; ++f) {
      Split& s = splits[static_cast<std::size_t>(f)];
      if (f == it->second) {
        s.test.push_back(i);
        s.test_queries.insert(q.query);
      } else {
        s.train.push_back(i);
        s.train_queries.insert(q.query);
      }
    }
  }
  return splits;
}

std::vector<QPV> gather(std::span<const QPV> qpvs, const std::vector<std::size_t>& idx) {
  std::vector<QPV> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(qpvs[i]);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void summarize(CvReport& report) {
  std::vector<double> tpr, tnr, f;
  for (const auto& fr : report.folds) {
    tpr.push_back(fr.metrics.tpr);
    tnr.push_back(fr.metrics.tnr);
    f.push_back(fr.metrics.f_measure);
    if (fr.metrics.n_positive == 0 || fr.metrics.n_negative == 0) {
      report.warnings.push_back("fold " + std::to_string(fr.fold) + " has " +
                                std::to_string(fr.metrics.n_positive) + " positive and " +
                                std::to_string(fr.metrics.n_negative) +
                                " negative QPVs; empty ratios reported as 0");
    }
  }
  report.mean_tpr = mean_of(tpr);
  report.mean_tnr = mean_of(tnr);
  report.mean_f = mean_of(f);
  report.stddev_tpr = stddev_of(tpr);
  report.stddev_tnr = stddev_of(tnr);
  report.stddev_f = stddev_of(f);
}

// Runs `body` for every fold in parallel and rethrows the first failure.
template <typename Body>
void for_each_fold(std::size_t folds, Body body) {
  std::vector<std::exception_ptr> errors(folds);
  const long n = static_cast<long>(folds);
#pragma omp parallel for schedule(dynamic)
  for (long f = 0; f < n; ++f) {
    try {
      body(static_cast<std::size_t>(f));
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

FoldReport fold_report(int fold, const Split& s, MetricsReport metrics) {
  FoldReport r;
  r.fold = fold;
  r.train_qpvs = s.train.size();
  r.test_qpvs = s.test.size();
  r.train_queries = s.train_queries.size();
  r.test_queries = s.test_queries.size();
  r.metrics = metrics;
  return r;
}

}  // namespace

CvReport cross_validate(std::span<const QPV> qpvs, Strategy strategy,
                        const GbtConfig& gbt_config, const CvConfig& cv_config,
                        const PipelineOptions& options) {
  if (qpvs.empty()) throw DataError("cross_validate: empty log");
  const auto splits = make_splits(qpvs, cv_config);

  // Card names only; no statistics leave the training folds.
  std::set<std::string> cards;
  for (const auto& q : qpvs) {
    for (const auto& c : q.cards) cards.insert(c.card_type);
  }
  const std::vector<std::string> universe(cards.begin(), cards.end());

  CvReport report;
  report.strategy = to_string(strategy);
  report.num_folds = cv_config.num_folds;
  report.seed = cv_config.seed;
  report.folds.resize(splits.size());
  for_each_fold(splits.size(), [&](std::size_t f) {
    const Split& s = splits[f];
    if (s.train.empty()) throw DataError("fold " + std::to_string(f) + " has no training QPVs");
    const std::vector<QPV> test = gather(qpvs, s.test);
    TrainedRanker ranker;
    {
      const std::vector<QPV> train = gather(qpvs, s.train);
      PipelineOptions fold_options = options;
      fold_options.query_blind = cv_config.query_blind_training;
      ranker = train_ranker(train, strategy, gbt_config, fold_options, universe);
    }
    std::map<std::string, PredictedRanking> predictions;
    for (const auto& q : test) {
      if (ranker.index.contains_qpv(q.qpv_id)) {
        throw std::logic_error("held-out qpv '" + q.qpv_id + "' leaked into the feature index");
      }
      predictions.emplace(q.qpv_id, predict_qpv(ranker, q));
    }
    report.folds[f] = fold_report(static_cast<int>(f), s, evaluate(predictions, test));
  });
  summarize(report);
  return report;
}

CvReport cross_validate_predictor(std::span<const QPV> qpvs, const std::string& name,
                                  const CvConfig& cv_config, const QpvPredictor& predictor) {
  if (qpvs.empty()) throw DataError("cross_validate: empty log");
  const auto splits = make_splits(qpvs, cv_config);
  CvReport report;
  report.strategy = name;
  report.num_folds = cv_config.num_folds;
  report.seed = cv_config.seed;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const std::vector<QPV> test = gather(qpvs, splits[f].test);
    std::map<std::string, PredictedRanking> predictions;
    for (const auto& q : test) predictions.emplace(q.qpv_id, predictor(q));
    report.folds.push_back(
        fold_report(static_cast<int>(f), splits[f], evaluate(predictions, test)));
  }
  summarize(report);
  return report;
}

namespace {

nlohmann::ordered_json metrics_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["tpr"] = m.tpr;
  j["tnr"] = m.tnr;
  j["f_measure"] = m.f_measure;
  j["n_positive"] = m.n_positive;
  j["n_negative"] = m.n_negative;
  j["matched_positive"] = m.matched_positive;
  j["matched_negative"] = m.matched_negative;
  return j;
}

}  // namespace

std::string to_json(const MetricsReport& m) { return metrics_json(m).dump(2); }

std::string to_json(const CvReport& report) {
  nlohmann::ordered_json j;
  j["strategy"] = report.strategy;
  j["num_folds"] = report.num_folds;
  j["seed"] = report.seed;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : report.folds) {
    nlohmann::ordered_json fj;
    fj["fold"] = f.fold;
    fj["train_qpvs"] = f.train_qpvs;
    fj["test_qpvs"] = f.test_qpvs;
    fj["train_queries"] = f.train_queries;
    fj["test_queries"] = f.test_queries;
    fj["metrics"] = metrics_json(f.metrics);
    j["folds"].push_back(std::move(fj));
  }
  nlohmann::ordered_json summary;
  summary["mean"] = {{"tpr", report.mean_tpr}, {"tnr", report.mean_tnr}, {"f_measure", report.mean_f}};
  summary["stddev"] = {
      {"tpr", report.stddev_tpr}, {"tnr", report.stddev_tnr}, {"f_measure", report.stddev_f}};
  j["summary"] = std::move(summary);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

void write_tsv_row(std::ostream& out, const CvReport& report, bool header) {
  if (header) out << "strategy\ttpr\ttnr\tf_measure\tf_stddev\n";
  out << report.strategy << '\t' << format_double(report.mean_tpr) << '\t'
      << format_double(report.mean_tnr) << '\t' << format_double(report.mean_f) << '\t'
      << format_double(report.stddev_f) << '\n';
}

}  // namespace cardrank
