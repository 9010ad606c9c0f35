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

// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "cardrank/gbt.hpp"
#include "cardrank/ltl.hpp"
#include "cardrank/split_search.hpp"
#include "cardrank/synth.hpp"

namespace {

using namespace cardrank;

struct SplitFixture {
  Dataset data{16};
  std::vector<double> residuals;
  std::vector<std::vector<std::size_t>> order;
  NodeSamples node;
  SplitSearchInput in;

  explicit SplitFixture(int rows) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(16);
    for (int i = 0; i < rows; ++i) {
      for (auto& v : x) v = n(rng);
      data.add_row(x, 0.0);
      residuals.push_back(x[0] * x[1] + n(rng));
    }
    order.resize(16);
    for (std::size_t f = 0; f < 16; ++f) {
      order[f].resize(data.rows());
      std::iota(order[f].begin(), order[f].end(), std::size_t{0});
      std::stable_sort(order[f].begin(), order[f].end(), [&](auto a, auto b) {
        return data.feature(a, f) < data.feature(b, f);
      });
      node.sorted.emplace_back(order[f]);
    }
    in.data = &data;
    in.residuals = residuals;
    in.min_samples_per_leaf = 20;
  }
};

void BM_SplitSerial(benchmark::State& state) {
  const SplitFixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(find_best_split_serial(fx.in, fx.node));
}

void BM_SplitParallel(benchmark::State& state) {
  const SplitFixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(find_best_split_parallel(fx.in, fx.node));
}

const std::vector<QPV>& bench_log() {
  static const auto log = [] {
    WorldConfig c;
    c.num_sessions = 20000;
    return generate_log(c).qpvs;
  }();
  return log;
}

void BM_LtlSerial(benchmark::State& state) {
  const auto& log = bench_log();
  for (auto _ : state) benchmark::DoNotOptimize(fit_ltl_all_serial(log));
}

void BM_LtlParallel(benchmark::State& state) {
  const auto& log = bench_log();
  for (auto _ : state) benchmark::DoNotOptimize(fit_ltl_all(log));
}

void BM_GenerateSerial(benchmark::State& state) {
  WorldConfig c;
  c.num_sessions = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate_log_serial(c));
}

void BM_GenerateParallel(benchmark::State& state) {
  WorldConfig c;
  c.num_sessions = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate_log(c));
}

BENCHMARK(BM_SplitSerial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SplitParallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LtlSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LtlParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenerateSerial)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenerateParallel)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
