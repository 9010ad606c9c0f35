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

#include "cardrank/cli.hpp"

#include <omp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardrank/error.hpp"
#include "cardrank/eval.hpp"
#include "cardrank/io.hpp"
#include "cardrank/labeling.hpp"
#include "cardrank/ltl.hpp"
#include "cardrank/qpv.hpp"
#include "cardrank/ranking.hpp"
#include "cardrank/synth.hpp"

namespace cardrank::cli {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

// Module settings: defaults, then the --config file, then explicit flags.
struct Settings {
  GbtConfig gbt;
  FitConfig ltl;
  PipelineOptions pipeline;
  CvConfig cv;
  WorldConfig world;
  JudgmentConfig judgments;
};

template <typename T>
void take(const json& section, const char* key, T& field, std::set<std::string>& seen) {
  if (section.contains(key)) {
    field = section.at(key).get<T>();
    seen.insert(key);
  }
}

void reject_unknown(const json& section, const std::string& name,
                    const std::set<std::string>& seen) {
  for (const auto& [key, value] : section.items()) {
    if (!seen.count(key)) throw DataError("config: unknown key '" + name + "." + key + "'");
  }
}

void apply_config_file(const std::string& path, Settings& s) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config " + path + ": expected a JSON object");
  try {
    for (const auto& [name, section] : j.items()) {
      std::set<std::string> seen;
      if (name == "gbt") {
        take(section, "num_trees", s.gbt.num_trees, seen);
        take(section, "max_leaf_nodes", s.gbt.max_leaf_nodes, seen);
        take(section, "shrinkage", s.gbt.shrinkage, seen);
        take(section, "min_samples_per_leaf", s.gbt.min_samples_per_leaf, seen);
        take(section, "feature_subsample", s.gbt.feature_subsample, seen);
      } else if (name == "ltl") {
        take(section, "l2_lambda", s.ltl.l2_lambda, seen);
        take(section, "max_iterations", s.ltl.max_iterations, seen);
        take(section, "gradient_tolerance", s.ltl.gradient_tolerance, seen);
      } else if (name == "labels") {
        take(section, "d_plus", s.pipeline.movement.d_plus, seen);
        take(section, "d_minus", s.pipeline.movement.d_minus, seen);
        take(section, "apl_combine", s.pipeline.approx_pairwise.combine, seen);
        take(section, "apl_example_signs", s.pipeline.approx_pairwise.example_signs, seen);
        if (section.contains("positives")) {
          const auto v = section.at("positives").get<std::string>();
          if (v == "all") {
            s.pipeline.pointwise.positives = PositiveRule::kAll;
          } else if (v == "post-reform") {
            s.pipeline.pointwise.positives = PositiveRule::kPostReform;
          } else {
            throw DataError("config: labels.positives must be 'all' or 'post-reform'");
          }
          seen.insert("positives");
        }
      } else if (name == "features") {
        take(section, "smoothing", s.pipeline.smoothing, seen);
      } else if (name == "cv") {
        take(section, "num_folds", s.cv.num_folds, seen);
        take(section, "query_blind_training", s.cv.query_blind_training, seen);
      } else if (name == "world") {
        auto& w = s.world;
        take(section, "num_queries", w.num_queries, seen);
        take(section, "num_card_types", w.num_card_types, seen);
        take(section, "num_sessions", w.num_sessions, seen);
        if (section.contains("cards_per_page")) {
          w.cards_per_page.clear();
          for (const auto& [k, v] : section.at("cards_per_page").items()) {
            w.cards_per_page[std::stoi(k)] = v.get<double>();
          }
          seen.insert("cards_per_page");
        }
        take(section, "relevance_concentration", w.relevance_concentration, seen);
        take(section, "query_specificity", w.query_specificity, seen);
        take(section, "reformulation_steepness", w.reformulation_steepness, seen);
        take(section, "quality_pivot", w.quality_pivot, seen);
        take(section, "position_bias", w.position_bias, seen);
        take(section, "ideal_display_prob", w.ideal_display_prob, seen);
        take(section, "swap_in_prob", w.swap_in_prob, seen);
        take(section, "max_chain_length", w.max_chain_length, seen);
        take(section, "linkless_fraction", w.linkless_fraction, seen);
        take(section, "max_links", w.max_links, seen);
      } else if (name == "judgments") {
        take(section, "query_fraction", s.judgments.query_fraction, seen);
        take(section, "noise_sd", s.judgments.noise_sd, seen);
      } else {
        throw DataError("config: unknown section '" + name + "'");
      }
      reject_unknown(section, name, seen);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw DataError("config: page sizes must be integers");
  }
}

std::vector<QPV> load_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return parse_qpv_log(in);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

template <typename Fn>
auto load_stream(const std::string& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return fn(in);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Writes atomically to `path`, or to `out` when no path was given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

class Progress {
 public:
  Progress(std::ostream& err, bool enabled, int verbosity)
      : err_(err), enabled_(enabled), verbosity_(verbosity) {}

  void stage(const std::string& name) {
    if (enabled_) {
      ojson j;
      j["event"] = "stage";
      j["stage"] = name;
      err_ << j.dump() << '\n';
    }
    if (verbosity_ > 0) err_ << "cardrank: " << name << '\n';
  }
  void info(const std::string& message) {
    if (verbosity_ > 0) err_ << "cardrank: " << message << '\n';
  }

 private:
  std::ostream& err_;
  bool enabled_;
  int verbosity_;
};

std::vector<CardLabel> load_judgments(const std::string& path) {
  return load_stream(path, [](std::istream& in) { return import_human_judgments(in); });
}

std::string labels_text(const LabelSet& labels) {
  std::ostringstream buf;
  if (!labels.pair.empty()) {
    write_labels(buf, labels.pair);
  } else if (!labels.list.empty()) {
    write_labels(buf, labels.list);
  } else {
    write_labels(buf, labels.card);
  }
  return buf.str();
}

FeatureIndex index_for(const RankerModel& model, std::span<const QPV> log) {
  FeatureIndex index = build_feature_index(log, model.universe, model.smoothing);
  return model.query_blind ? index.query_blind() : index;
}

std::string prediction_line(const PredictedRanking& p, const std::string& qpv_id) {
  ojson j;
  if (!qpv_id.empty()) j["qpv_id"] = qpv_id;
  j["query"] = p.query;
  j["ranking"] = p.ranking;
  j["score"] = p.score;
  return j.dump() + "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Card ranking from query reformulations", "cardrank"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // Shared flags.
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  bool progress = false;
  int verbosity = 0;
  app.add_option("--config", config_path, "JSON file overriding module defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for every random choice");
  app.add_option("--workers", workers, "Worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--progress", progress, "Emit JSON progress events on stderr");
  app.add_flag("-v,--verbose", verbosity, "Log steps to stderr");
  app.fallthrough();

  std::string input, output, strategy_name;
  auto add_io = [&](CLI::App* sub, bool input_required, const char* input_help) {
    auto* i = sub->add_option("-i,--input", input, input_help)->check(CLI::ExistingFile);
    if (input_required) i->required();
    sub->add_option("-o,--output", output, "Output file (default: stdout)");
  };

  int trees = 0, leaves = 0, min_leaf = 0, folds = 0;
  double shrinkage = 0, d_plus = 0, d_minus = 0, l2 = 0, smoothing = 0;
  std::string positives;
  bool apl_uncombined = false, apl_example_signs = false;
  auto add_gbt = [&](CLI::App* sub) {
    sub->add_option("--trees", trees, "Boosting iterations")->check(CLI::PositiveNumber);
    sub->add_option("--leaves", leaves, "Leaves per tree")->check(CLI::Range(2, 1 << 20));
    sub->add_option("--shrinkage", shrinkage, "Learning rate in (0, 1]");
    sub->add_option("--min-leaf", min_leaf, "Minimum samples per leaf")->check(CLI::PositiveNumber);
    sub->add_option("--smoothing", smoothing, "Added to rate-feature denominators")
        ->check(CLI::NonNegativeNumber);
  };
  auto add_label_opts = [&](CLI::App* sub) {
    sub->add_option("--d-plus", d_plus, "Movement label for cards new on the successor page");
    sub->add_option("--d-minus", d_minus, "Movement label for dropped cards");
    sub->add_option("--positives", positives, "Positive pointwise QPVs")
        ->check(CLI::IsMember({"all", "post-reform"}));
    sub->add_flag("--apl-uncombined", apl_uncombined, "Keep one APL label per pair side");
    sub->add_flag("--apl-example-signs", apl_example_signs,
                  "Break negative pairs with positive-pair signs");
    sub->add_option("--l2", l2, "LtL L2 penalty")->check(CLI::NonNegativeNumber);
  };
  const std::vector<std::string> strategies = {"npl", "dpl", "mpl", "apl",
                                               "ll",  "ltl", "ctr", "human"};

  auto* stats = app.add_subcommand("stats", "Dataset statistics of a QPV log");
  add_io(stats, true, "QPV log");

  auto* derive = app.add_subcommand("derive-labels", "Derive training labels from a QPV log");
  add_io(derive, true, "QPV log");
  std::string judgments_path, ltl_models_path;
  {
    auto names = strategies;
    names.push_back("pairwise");
    derive->add_option("--strategy", strategy_name, "Labeling strategy")
        ->required()
        ->check(CLI::IsMember(names, CLI::ignore_case));
  }
  add_label_opts(derive);
  derive->add_option("--judgments", judgments_path, "Judgment TSV (human strategy)")
      ->check(CLI::ExistingFile);
  derive->add_option("--ltl-models", ltl_models_path, "Use fitted LtL models instead of refitting")
      ->check(CLI::ExistingFile);

  auto* fit = app.add_subcommand("fit-ltl", "Fit per-query learning-to-label models");
  add_io(fit, true, "QPV log");
  std::string values_path;
  int max_iter = 0;
  fit->add_option("--l2", l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  fit->add_option("--max-iter", max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  fit->add_option("--values", values_path, "Also write the card value report (TSV)");

  auto* train = app.add_subcommand("train", "Train a GBT ranker from a label file");
  add_io(train, true, "Label file");
  std::string log_path, dump_path;
  bool query_blind = false;
  train->add_option("--log", log_path, "QPV log the features are computed from")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--feature-dump", dump_path, "Write the feature table (TSV)");
  train->add_flag("--query-blind", query_blind, "Use card-level features only");
  add_gbt(train);

  auto* rank = app.add_subcommand("rank", "Rank candidate cards with a trained model");
  add_io(rank, true, "Requests: one JSON object per line with query and candidates");
  std::string model_path, lists_path;
  rank->add_option("-m,--model", model_path, "Ranker model")->required()->check(CLI::ExistingFile);
  rank->add_option("--log", log_path, "QPV log used at training time")
      ->required()
      ->check(CLI::ExistingFile);
  rank->add_option("--candidate-lists", lists_path, "Lists a listwise model may choose from")
      ->check(CLI::ExistingFile);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Exact-match metrics of predictions");
  add_io(evaluate_cmd, true, "QPV log to evaluate against");
  std::string predictions_path, truth_path;
  auto* pred_opt = evaluate_cmd->add_option("--predictions", predictions_path,
                                            "Predictions with qpv_id (JSON lines)")
                       ->check(CLI::ExistingFile);
  auto* model_opt = evaluate_cmd->add_option("-m,--model", model_path, "Ranker model")
                        ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--log", log_path, "Training log for --model features")
      ->check(CLI::ExistingFile);
  auto* truth_opt = evaluate_cmd->add_option("--truth", truth_path, "Score the ground-truth oracle")
                        ->check(CLI::ExistingFile);
  pred_opt->excludes(model_opt)->excludes(truth_opt);
  model_opt->excludes(truth_opt);

  auto* cv = app.add_subcommand("cross-validate", "K-fold evaluation of a labeling strategy");
  add_io(cv, true, "QPV log");
  std::string tsv_path;
  cv->add_option("--strategy", strategy_name, "Labeling strategy")
      ->required()
      ->check(CLI::IsMember(strategies, CLI::ignore_case));
  cv->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 1000));
  cv->add_option("--judgments", judgments_path, "Judgment TSV (human strategy)")
      ->check(CLI::ExistingFile);
  cv->add_option("--tsv", tsv_path, "Append a summary row to this TSV file");
  add_gbt(cv);
  add_label_opts(cv);

  auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic QPV log");
  std::string judgments_out;
  int sessions = 0, queries = 0, cards = 0;
  synth->add_option("-o,--output", output, "QPV log")->required();
  synth->add_option("--truth", truth_path, "Ground-truth sidecar (JSON lines)");
  synth->add_option("--judgments", judgments_out, "Simulated editorial judgments (TSV)");
  synth->add_option("--sessions", sessions, "Number of sessions")->check(CLI::PositiveNumber);
  synth->add_option("--queries", queries, "Number of query terms")->check(CLI::PositiveNumber);
  synth->add_option("--cards", cards, "Number of card types")->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("cardrank");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "cardrank: " << e.what() << "\n";
    err << "Run with --help for usage.\n";
    return kUsageError;
  }

  Progress log(err, progress, verbosity);
  try {
    Settings s;
    if (!config_path.empty()) apply_config_file(config_path, s);
    // Every random choice derives from the one seed.
    s.world.seed = seed;
    s.judgments.seed = seed;
    s.cv.seed = seed;
    s.gbt.seed = seed;
    if (workers > 0) omp_set_num_threads(workers);

    auto given = [](CLI::App* sub, const char* flag) {
      auto* opt = sub->get_option_no_throw(flag);
      return opt != nullptr && opt->count() > 0;
    };
    CLI::App* sub = app.get_subcommands().front();
    if (given(sub, "--trees")) s.gbt.num_trees = trees;
    if (given(sub, "--leaves")) s.gbt.max_leaf_nodes = leaves;
    if (given(sub, "--shrinkage")) s.gbt.shrinkage = shrinkage;
    if (given(sub, "--min-leaf")) s.gbt.min_samples_per_leaf = min_leaf;
    if (given(sub, "--smoothing")) s.pipeline.smoothing = smoothing;
    if (given(sub, "--d-plus")) s.pipeline.movement.d_plus = d_plus;
    if (given(sub, "--d-minus")) s.pipeline.movement.d_minus = d_minus;
    if (given(sub, "--l2")) s.ltl.l2_lambda = l2;
    if (given(sub, "--max-iter")) s.ltl.max_iterations = max_iter;
    if (given(sub, "--folds")) s.cv.num_folds = folds;
    if (given(sub, "--positives")) {
      s.pipeline.pointwise.positives =
          positives == "all" ? PositiveRule::kAll : PositiveRule::kPostReform;
    }
    if (apl_uncombined) s.pipeline.approx_pairwise.combine = false;
    if (apl_example_signs) s.pipeline.approx_pairwise.example_signs = true;
    if (given(sub, "--sessions")) s.world.num_sessions = sessions;
    if (given(sub, "--queries")) s.world.num_queries = queries;
    if (given(sub, "--cards")) s.world.num_card_types = cards;
    s.pipeline.ltl = s.ltl;

    if (*stats) {
      log.stage("read-log");
      const auto qpvs = load_log(input);
      log.stage("stats");
      emit(output, stats_to_json(compute_stats(qpvs)) + "\n", out);
    } else if (*derive) {
      log.stage("read-log");
      const auto qpvs = load_log(input);
      log.stage("derive-labels");
      LabelSet labels;
      std::string name = strategy_name;
      std::transform(name.begin(), name.end(), name.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (name == "pairwise") {
        labels.pair = label_pairwise(qpvs);
      } else {
        const Strategy strategy = parse_strategy(name);
        if (strategy == Strategy::kHuman) {
          if (judgments_path.empty()) throw DataError("the human strategy needs --judgments");
          s.pipeline.judgments = load_judgments(judgments_path);
        }
        if (strategy == Strategy::kLTL && !ltl_models_path.empty()) {
          const auto models = load_stream(ltl_models_path,
                                          [](std::istream& in) { return read_ltl_models(in); });
          labels.card = ltl_labels(models, qpvs);
        } else {
          labels = derive_labels(qpvs, strategy, s.pipeline);
        }
      }
      log.info(std::to_string(labels.card.size() + labels.pair.size() + labels.list.size()) +
               " labels");
      emit(output, labels_text(labels), out);
    } else if (*fit) {
      log.stage("read-log");
      const auto qpvs = load_log(input);
      log.stage("fit-ltl");
      const auto models = fit_ltl_all(qpvs, s.ltl);
      std::ostringstream buf;
      write_ltl_models(buf, models);
      emit(output, buf.str(), out);
      if (!values_path.empty()) {
        std::map<std::string, std::vector<QPV>> by_query;
        for (const auto& q : qpvs) by_query[q.query].push_back(q);
        std::vector<CardValueReport> reports;
        for (const auto& m : models) reports.push_back(ltl_card_values(m, by_query.at(m.query)));
        std::ostringstream tsv;
        write_value_report(tsv, reports);
        write_file_atomic(values_path, tsv.str());
      }
    } else if (*train) {
      log.stage("read-labels");
      const LabelSet labels =
          load_stream(input, [](std::istream& in) { return read_labels(in); });
      const auto qpvs = load_log(log_path);
      log.stage("features");
      std::set<std::string> universe;
      for (const auto& q : qpvs) {
        for (const auto& c : q.cards) universe.insert(c.card_type);
      }
      for (const auto& l : labels.card) universe.insert(l.card_type);
      FeatureIndex index = build_feature_index(
          qpvs, std::vector<std::string>(universe.begin(), universe.end()), s.pipeline.smoothing);
      if (query_blind) index = index.query_blind();
      if (!dump_path.empty()) {
        std::ostringstream dump;
        write_feature_dump(dump, index);
        write_file_atomic(dump_path, dump.str());
      }
      RankerModel model;
      if (!labels.pair.empty()) {
        model.scenario = Scenario::kPairwise;
        model.strategy = Strategy::kAPL;
      } else if (!labels.list.empty()) {
        model.scenario = Scenario::kListwise;
        model.strategy = Strategy::kLL;
      } else if (!labels.card.empty()) {
        model.scenario = Scenario::kPointwise;
        model.strategy = labels.card.front().strategy;
      } else {
        throw DataError(input + ": no labels");
      }
      log.stage("fit-gbt");
      const Dataset data = build_training_set(labels, index, model.scenario);
      model.universe = index.universe();
      model.smoothing = s.pipeline.smoothing;
      model.query_blind = query_blind;
      model.gbt = fit_gbt(data, s.gbt);
      emit(output, serialize(model) + "\n", out);
    } else if (*rank) {
      const RankerModel model = parse_ranker_model(read_file(model_path));
      if (model.scenario == Scenario::kPairwise) {
        throw DataError("pairwise models have no ranking operation; train on combined APL labels");
      }
      const auto qpvs = load_log(log_path);
      const FeatureIndex index = index_for(model, qpvs);
      std::optional<std::vector<std::vector<std::string>>> lists;
      if (!lists_path.empty()) {
        lists = load_stream(lists_path, [](std::istream& in) { return read_candidate_lists(in); });
      }
      log.stage("rank");
      std::ifstream in(input);
      if (!in) throw DataError("cannot open " + input);
      std::string line, result;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        RankRequest request;
        std::string id;
        try {
          const auto j = json::parse(line);
          request.query = j.at("query").get<std::string>();
          request.candidate_cards = j.at("candidates").get<std::vector<std::string>>();
          request.max_list_size = j.value("max_list_size", request.max_list_size);
          id = j.value("qpv_id", std::string());
        } catch (const json::exception& e) {
          throw DataError(input + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        const PredictedRanking p = model.scenario == Scenario::kListwise
                                       ? rank_listwise(model.gbt, index, request, lists)
                                       : rank_pointwise(model.gbt, index, request);
        result += prediction_line(p, id);
      }
      emit(output, result, out);
    } else if (*evaluate_cmd) {
      const auto qpvs = load_log(input);
      std::map<std::string, PredictedRanking> predictions;
      if (!predictions_path.empty()) {
        std::ifstream in(predictions_path);
        if (!in) throw DataError("cannot open " + predictions_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          try {
            const auto j = json::parse(line);
            PredictedRanking p;
            p.query = j.value("query", std::string());
            p.ranking = j.at("ranking").get<std::vector<std::string>>();
            p.score = j.value("score", 0.0);
            predictions[j.at("qpv_id").get<std::string>()] = std::move(p);
          } catch (const json::exception& e) {
            throw DataError(predictions_path + ": line " + std::to_string(line_no) + ": " +
                            e.what());
          }
        }
      } else if (!model_path.empty()) {
        if (log_path.empty()) throw DataError("--model needs --log");
        TrainedRanker ranker;
        ranker.model = parse_ranker_model(read_file(model_path));
        ranker.index = index_for(ranker.model, load_log(log_path));
        for (const auto& q : qpvs) predictions[q.qpv_id] = predict_qpv(ranker, q);
      } else if (!truth_path.empty()) {
        const GroundTruth truth =
            load_stream(truth_path, [](std::istream& in) { return read_truth(in); });
        for (const auto& q : qpvs) {
          predictions[q.qpv_id] = oracle_ranking(truth, q.query, q.ranking());
        }
      } else {
        throw DataError("evaluate needs --predictions, --model or --truth");
      }
      log.stage("evaluate");
      emit(output, to_json(evaluate(predictions, qpvs)) + "\n", out);
    } else if (*cv) {
      log.stage("read-log");
      const auto qpvs = load_log(input);
      const Strategy strategy = parse_strategy(strategy_name);
      if (strategy == Strategy::kHuman) {
        if (judgments_path.empty()) throw DataError("the human strategy needs --judgments");
        s.pipeline.judgments = load_judgments(judgments_path);
      }
      log.stage("cross-validate");
      const CvReport report = cross_validate(qpvs, strategy, s.gbt, s.cv, s.pipeline);
      for (const auto& w : report.warnings) err << "cardrank: warning: " << w << '\n';
      emit(output, to_json(report), out);
      if (!tsv_path.empty()) {
        const bool fresh = !std::filesystem::exists(tsv_path);
        std::string existing = fresh ? std::string() : read_file(tsv_path);
        std::ostringstream row;
        write_tsv_row(row, report, fresh);
        write_file_atomic(tsv_path, existing + row.str());
      }
    } else if (*synth) {
      log.stage("generate");
      const SyntheticLog generated = generate_log(s.world);
      std::ostringstream buf;
      write_qpv_log(buf, generated.qpvs);
      write_file_atomic(output, buf.str());
      if (!truth_path.empty()) {
        std::ostringstream t;
        write_truth(t, generated.truth);
        write_file_atomic(truth_path, t.str());
      }
      if (!judgments_out.empty()) {
        std::ostringstream j;
        write_judgments(j, simulate_judgments(generated.truth, s.judgments));
        write_file_atomic(judgments_out, j.str());
      }
      log.info(std::to_string(generated.qpvs.size()) + " QPVs written");
    }
    log.stage("done");
    return kOk;
  } catch (const DataError& e) {
    err << "cardrank: error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace cardrank::cli
