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

#include "cardrank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cardrank/error.hpp"

namespace cardrank {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Portable samplers; the std distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t below(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

const char* const kCardNames[] = {
    "NavigationCard", "NewsCard",  "WebCard",     "ImageCard",  "VideoCard",
    "LocalCard",      "WeatherCard", "FinanceCard", "PersonCard", "Q2ACard",
    "SportsCard",     "MovieCard", "MusicCard",   "ShoppingCard", "MapCard",
    "EventCard"};

std::string pad(std::size_t value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

}  // namespace

void WorldConfig::validate() const {
  if (num_queries < 1 || num_card_types < 1 || num_sessions < 0) {
    throw DataError("world config: counts must be positive");
  }
  if (cards_per_page.empty()) throw DataError("world config: empty page-size distribution");
  double total = 0.0;
  for (const auto& [size, p] : cards_per_page) {
    if (size < 1 || p < 0 || p > 1) throw DataError("world config: bad page-size entry");
    if (p > 0 && size > num_card_types) {
      throw DataError("world config: page size " + std::to_string(size) + " exceeds " +
                      std::to_string(num_card_types) + " card types");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DataError("world config: page-size weights must sum to 1");
  }
  if (!(relevance_concentration > 0) || !(reformulation_steepness > 0)) {
    throw DataError("world config: concentration and steepness must be positive");
  }
  if (position_bias.empty()) throw DataError("world config: empty position bias");
  for (double p : position_bias) {
    if (p < 0 || p > 1) throw DataError("world config: position bias outside [0, 1]");
  }
  for (double p : {ideal_display_prob, swap_in_prob, linkless_fraction}) {
    if (p < 0 || p > 1) throw DataError("world config: probability outside [0, 1]");
  }
  if (max_chain_length < 1) throw DataError("world config: max_chain_length must be >= 1");
  if (max_links < 1) throw DataError("world config: max_links must be >= 1");
}

World make_world(const WorldConfig& config) {
  config.validate();
  Rng rng(splitmix64(config.seed ^ 0x5EEDF00DULL));
  World w;
  const auto k = static_cast<std::size_t>(config.num_card_types);
  for (std::size_t i = 0; i < k; ++i) {
    w.card_types.push_back(i < std::size(kCardNames) ? kCardNames[i] : "Card" + pad(i, 2));
  }
  w.num_links.assign(k, 0);
  // Weather and Q2A cards carry no links; further link-less cards, if the
  // fraction asks for more, are drawn at random.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::stable_partition(order.begin(), order.end(), [&](std::size_t c) {
    return w.card_types[c] == "WeatherCard" || w.card_types[c] == "Q2ACard";
  });
  const auto linkless = static_cast<std::size_t>(
      std::lround(config.linkless_fraction * static_cast<double>(k)));
  for (std::size_t i = 0; i < k; ++i) {
    w.num_links[order[i]] =
        i < linkless ? 0 : 1 + static_cast<int>(rng.below(static_cast<std::size_t>(config.max_links)));
  }
  std::vector<double> appeal(k);
  for (auto& a : appeal) a = rng.normal();

  const int width = static_cast<int>(std::to_string(config.num_queries).size());
  for (int q = 0; q < config.num_queries; ++q) {
    const std::string query = "query_" + pad(static_cast<std::size_t>(q), width);
    w.queries.push_back(query);
    std::vector<double> rel(k);
    for (std::size_t c = 0; c < k; ++c) {
      rel[c] = logistic(config.relevance_concentration *
                        (appeal[c] + config.query_specificity * rng.normal()));
      w.truth.relevance[query][w.card_types[c]] = rel[c];
    }
    w.relevance.push_back(rel);
    w.truth.ideal_ranking[query] =
        oracle_ranking(w.truth, query, w.card_types).ranking;
  }
  return w;
}

double ranking_dcg(std::span<const double> rel) {
  double dcg = 0.0;
  for (std::size_t k = 0; k < rel.size(); ++k) {
    dcg += rel[k] / std::log(2.0 + static_cast<double>(k));
  }
  return dcg;
}

double reformulation_probability(const WorldConfig& config, double dcg) {
  return logistic(-config.reformulation_steepness * (dcg - config.quality_pivot));
}

namespace {

// Cards of one page as indices into World::card_types, in shown order.
using Page = std::vector<std::size_t>;

QPV render_page(const World& w, const WorldConfig& config, Rng& rng, std::size_t query,
                const Page& page, const std::string& session_id, int step,
                std::int64_t timestamp) {
  QPV qpv;
  qpv.session_id = session_id;
  qpv.qpv_id = session_id + "-" + std::to_string(step);
  qpv.timestamp_ms = timestamp;
  qpv.query = w.queries[query];
  std::vector<double> shown_rel;
  for (std::size_t r = 0; r < page.size(); ++r) {
    const std::size_t c = page[r];
    const double rel = w.relevance[query][c];
    shown_rel.push_back(rel);
    const double bias =
        config.position_bias[std::min(r, config.position_bias.size() - 1)];
    CardObservation obs;
    obs.card_type = w.card_types[c];
    obs.rank = static_cast<int>(r) + 1;
    obs.viewed = rng.bernoulli(bias);
    obs.clicked = obs.viewed && rng.bernoulli(rel);
    obs.num_links = w.num_links[c];
    if (obs.clicked && obs.num_links > 0) {
      obs.num_link_clicks = 1;
      for (int l = 1; l < obs.num_links; ++l) obs.num_link_clicks += rng.bernoulli(0.3 * rel);
    }
    qpv.cards.push_back(std::move(obs));
  }
  qpv.reformulated =
      rng.bernoulli(reformulation_probability(config, ranking_dcg(shown_rel)));
  return qpv;
}

std::size_t draw_page_size(const WorldConfig& config, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = config.cards_per_page.begin()->first;
  for (const auto& [size, p] : config.cards_per_page) {
    if (p <= 0) continue;
    acc += p;
    last = size;
    if (u < acc) return static_cast<std::size_t>(size);
  }
  return static_cast<std::size_t>(last);
}

std::vector<QPV> generate_session(const World& w, const WorldConfig& config,
                                  std::size_t index) {
  Rng rng(splitmix64(config.seed * 0x100000001B3ULL + index + 1));
  const std::size_t query = rng.below(w.queries.size());
  const auto& rel = w.relevance[query];
  const std::size_t k = draw_page_size(config, rng);

  // Shown set: weighted sampling without replacement, weights rel + 0.05.
  Page page;
  std::vector<bool> taken(w.card_types.size(), false);
  while (page.size() < k) {
    double total = 0.0;
    for (std::size_t c = 0; c < rel.size(); ++c) total += taken[c] ? 0.0 : rel[c] + 0.05;
    double u = rng.uniform() * total;
    std::size_t pick = rel.size();
    for (std::size_t c = 0; c < rel.size(); ++c) {
      if (taken[c]) continue;
      pick = c;
      u -= rel[c] + 0.05;
      if (u < 0) break;
    }
    taken[pick] = true;
    page.push_back(pick);
  }
  auto by_relevance = [&](std::size_t a, std::size_t b) {
    if (rel[a] != rel[b]) return rel[a] > rel[b];
    return w.card_types[a] < w.card_types[b];
  };
  if (rng.bernoulli(config.ideal_display_prob)) {
    std::sort(page.begin(), page.end(), by_relevance);
  } else {
    rng.shuffle(page);
  }

  const std::string session_id = "s" + pad(index, 7);
  std::int64_t timestamp = 1'600'000'000'000LL + static_cast<std::int64_t>(index) * 3'600'000LL;
  std::vector<QPV> out;
  for (int step = 0;; ++step) {
    out.push_back(render_page(w, config, rng, query, page, session_id, step, timestamp));
    if (!out.back().reformulated || step + 1 >= config.max_chain_length) break;
    // Successor page: fix the first out-of-order adjacent pair, maybe swap a
    // new card in for the least relevant one.
    for (std::size_t r = 0; r + 1 < page.size(); ++r) {
      if (by_relevance(page[r + 1], page[r])) {
        std::swap(page[r], page[r + 1]);
        break;
      }
    }
    if (page.size() < w.card_types.size() && rng.bernoulli(config.swap_in_prob)) {
      std::vector<std::size_t> unseen;
      for (std::size_t c = 0; c < w.card_types.size(); ++c) {
        if (std::find(page.begin(), page.end(), c) == page.end()) unseen.push_back(c);
      }
      auto worst = std::min_element(page.begin(), page.end(),
                                    [&](std::size_t a, std::size_t b) {
                                      return by_relevance(b, a);
                                    });
      // The engine's second attempt favours cards it believes relevant.
      double total = 0.0;
      for (std::size_t c : unseen) total += rel[c] + 0.05;
      double u = rng.uniform() * total;
      std::size_t pick = unseen.back();
      for (std::size_t c : unseen) {
        u -= rel[c] + 0.05;
        if (u < 0) {
          pick = c;
          break;
        }
      }
      *worst = pick;
    }
    timestamp += 5000 + static_cast<std::int64_t>(rng.below(55000));
  }
  return out;
}

SyntheticLog assemble(const World& w, std::vector<std::vector<QPV>>& sessions) {
  SyntheticLog log;
  log.truth = w.truth;
  std::size_t total = 0;
  for (const auto& s : sessions) total += s.size();
  log.qpvs.reserve(total);
  for (auto& s : sessions) {
    for (auto& q : s) log.qpvs.push_back(std::move(q));
  }
  return log;
}

}  // namespace

SyntheticLog generate_log(const WorldConfig& config) {
  const World w = make_world(config);
  std::vector<std::vector<QPV>> sessions(static_cast<std::size_t>(config.num_sessions));
  const long n = config.num_sessions;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    sessions[i] = generate_session(w, config, static_cast<std::size_t>(i));
  }
  return assemble(w, sessions);
}

SyntheticLog generate_log_serial(const WorldConfig& config) {
  const World w = make_world(config);
  std::vector<std::vector<QPV>> sessions;
  for (int i = 0; i < config.num_sessions; ++i) {
    sessions.push_back(generate_session(w, config, static_cast<std::size_t>(i)));
  }
  return assemble(w, sessions);
}

PredictedRanking oracle_ranking(const GroundTruth& truth, const std::string& query,
                                std::span<const std::string> candidates) {
  auto it = truth.relevance.find(query);
  if (it == truth.relevance.end()) {
    throw DataError("oracle_ranking: unknown query '" + query + "'");
  }
  const auto& rel = it->second;
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& c : candidates) {
    auto r = rel.find(c);
    scored.emplace_back(r == rel.end() ? 0.0 : r->second, c);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  PredictedRanking out;
  out.query = query;
  std::vector<double> shown;
  for (const auto& [r, c] : scored) {
    out.ranking.push_back(c);
    shown.push_back(r);
  }
  out.score = ranking_dcg(shown);
  return out;
}

void write_truth(std::ostream& out, const GroundTruth& truth) {
  for (const auto& [query, rel] : truth.relevance) {
    nlohmann::ordered_json j;
    j["query"] = query;
    j["relevance"] = rel;
    j["ideal_ranking"] = truth.ideal_ranking.at(query);
    out << j.dump() << '\n';
  }
}

GroundTruth read_truth(std::istream& in) {
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto query = j.at("query").get<std::string>();
      truth.relevance[query] = j.at("relevance").get<std::map<std::string, double>>();
      truth.ideal_ranking[query] = j.at("ideal_ranking").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return truth;
}

std::vector<Judgment> simulate_judgments(const GroundTruth& truth,
                                         const JudgmentConfig& config) {
  if (config.query_fraction < 0 || config.query_fraction > 1 || config.noise_sd < 0) {
    throw DataError("judgment config out of range");
  }
  Rng rng(splitmix64(config.seed ^ 0x7A11ED5ULL));
  std::vector<std::string> queries;
  for (const auto& [q, rel] : truth.relevance) queries.push_back(q);
  rng.shuffle(queries);
  const auto judged = static_cast<std::size_t>(
      std::ceil(config.query_fraction * static_cast<double>(queries.size())));
  queries.resize(std::min(judged, queries.size()));
  std::sort(queries.begin(), queries.end());

  static const char* const kGrades[] = {"Very Poor", "Poor", "Neutral", "Good", "Excellent"};
  std::vector<Judgment> out;
  for (const auto& q : queries) {
    for (const auto& [card, rel] : truth.relevance.at(q)) {
      const double noisy = rel + config.noise_sd * rng.normal();
      const int level = std::clamp(static_cast<int>(std::floor(noisy * 5.0)), 0, 4);
      out.push_back({q, card, kGrades[level]});
    }
  }
  return out;
}

void write_judgments(std::ostream& out, std::span<const Judgment> judgments) {
  for (const auto& j : judgments) out << j.query << '\t' << j.card_type << '\t' << j.grade << '\n';
}

}  // namespace cardrank
