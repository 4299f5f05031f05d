// Copyright 2026 The latentsplit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "latentsplit/closest_split.hpp"
#include "latentsplit/diagnostics.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/random.hpp"
#include "latentsplit/subset_sum.hpp"
#include "latentsplit/targets.hpp"

namespace ls = latentsplit;

namespace {

// Gaussian-ish blobs from sums of uniforms; labels alternate.
ls::Dataset blobs(std::size_t n, std::size_t d, std::size_t centers, std::uint64_t seed) {
  ls::CounterRng rng(seed, 0);
  std::vector<std::vector<float>> mu(centers, std::vector<float>(d));
  for (auto& m : mu)
    for (auto& v : m) v = static_cast<float>(20 * rng.uniform() - 10);
  std::vector<ls::EmbeddingRecord> recs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = mu[rng.below(centers)];
    recs[i].id = "b" + std::to_string(i);
    recs[i].label = (i % 3 == 0) ? "hate" : "noHate";
    for (std::size_t j = 0; j < d; ++j) {
      const double noise = rng.uniform() + rng.uniform() + rng.uniform() - 1.5;
      recs[i].vector.push_back(m[j] + static_cast<float>(noise));
    }
  }
  return ls::Dataset::from_records(std::move(recs), d);
}

void BM_KMeans(benchmark::State& state) {
  const auto ds = blobs(static_cast<std::size_t>(state.range(0)), 50, 30, 1);
  ls::KMeansConfig config;
  config.n_init = 1;
  const int k = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ls::kmeans(ds, k, 42, config).inertia);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Args({5000, 10})->Args({5000, 50})->Args({20000, 50})
    ->Unit(benchmark::kMillisecond);

void BM_SubsetSumSelect(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  ls::CounterRng rng(7, 0);
  std::vector<ls::ClusterProfile> profiles(m);
  std::int64_t total0 = 0, total1 = 0;
  for (std::size_t c = 0; c < m; ++c) {
    profiles[c].cluster_index = static_cast<int>(c);
    profiles[c].counts = {static_cast<std::int64_t>(rng.below(400)),
                          static_cast<std::int64_t>(rng.below(80))};
    profiles[c].size = profiles[c].counts[0] + profiles[c].counts[1];
    total0 += profiles[c].counts[0];
    total1 += profiles[c].counts[1];
  }
  ls::SplitTarget target;
  target.per_class = {static_cast<std::size_t>(total0 / 10),
                      static_cast<std::size_t>(total1 / 10)};
  target.total = target.per_class[0] + target.per_class[1];
  for (auto _ : state) {
    benchmark::DoNotOptimize(ls::subset_sum_select(profiles, target).deficit_l1);
  }
}
BENCHMARK(BM_SubsetSumSelect)->Arg(10)->Arg(30)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ClosestSplitForK(benchmark::State& state) {
  const auto ds = blobs(20000, 50, 40, 2);
  ls::KMeansConfig config;
  config.n_init = 1;
  const auto clustering = ls::kmeans(ds, static_cast<int>(state.range(0)), 42, config);
  const auto target = ls::compute_target(ds, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ls::closest_split_for_k(ds, clustering, target).individual_topups);
  }
}
BENCHMARK(BM_ClosestSplitForK)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_UnigramOverlap(benchmark::State& state) {
  const std::vector<std::string> vocab{"hate", "love", "cats", "dogs", "run",  "fast",
                                       "slow", "red",  "blue", "sky",  "sea",  "moon",
                                       "zap",  "quiz", "jazz", "fox",  "owl",  "elk"};
  ls::CounterRng rng(3, 0);
  auto text = [&] {
    std::string s;
    for (int w = 0; w < 12; ++w) s += vocab[rng.below(vocab.size())] + std::to_string(rng.below(50)) + " ";
    return s;
  };
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> train, test;
  for (std::size_t i = 0; i < n; ++i) train.push_back(text());
  for (std::size_t i = 0; i < n / 9; ++i) test.push_back(text());
  const std::unordered_set<std::string> none;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ls::unigram_overlap(train, test, none).value);
  }
}
BENCHMARK(BM_UnigramOverlap)->Arg(2000)->Arg(18000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
