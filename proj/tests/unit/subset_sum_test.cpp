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


#include <gtest/gtest.h>

#include <map>
#include <set>

#include "latentsplit/error.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/random.hpp"
#include "latentsplit/subset_sum.hpp"
#include "latentsplit/targets.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace ls = latentsplit;

namespace {

std::vector<ls::ClusterProfile> profiles(const std::vector<std::vector<std::int64_t>>& counts) {
  std::vector<ls::ClusterProfile> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    ls::ClusterProfile p;
    p.cluster_index = static_cast<int>(i);
    p.counts = counts[i];
    for (const auto c : counts[i]) p.size += c;
    out.push_back(p);
  }
  return out;
}

ls::SplitTarget target_of(const std::vector<std::size_t>& per_class) {
  ls::SplitTarget t;
  t.per_class = per_class;
  for (const auto c : per_class) t.total += c;
  return t;
}

// Five tight blobs; blob 4 sits next to blob 3 so it only separates at k=5,
// and holds exactly the test target.
ls::Dataset five_blobs(std::vector<std::size_t>& blob_of) {
  const std::vector<std::pair<int, int>> counts{{50, 50}, {50, 50}, {50, 50}, {50, 50}, {22, 22}};
  ls::CounterRng rng(123, 0);
  std::vector<ls::EmbeddingRecord> r;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    for (int i = 0; i < counts[b].first + counts[b].second; ++i) {
      std::vector<float> v(6, 0.0f);
      v[std::min<std::size_t>(b, 3)] = 100.0f;
      if (b == 4) v[4] = 14.0f;
      for (auto& x : v) x += static_cast<float>(ls::testing::normal(rng));
      r.push_back({"b" + std::to_string(b) + "_" + std::to_string(i), v,
                   i < counts[b].first ? "A" : "B", {}, {}, {}, {}});
      blob_of.push_back(b);
    }
  }
  return ls::Dataset::from_records(r, 6);
}

}  // namespace

TEST(SubsetSelect, ThreeProfileExample) {
  const auto p = profiles({{3, 1}, {2, 2}, {1, 0}});
  const auto sol = ls::subset_sum_select(p, target_of({3, 2}));
  EXPECT_EQ(sol.chosen, (std::vector<int>{1, 2}));
  EXPECT_EQ(sol.achieved, (std::vector<std::int64_t>{3, 2}));
  EXPECT_EQ(sol.deficit_l1, 0);
}

TEST(SubsetSelect, SingleExactCluster) {
  const auto p = profiles({{5, 5}, {2, 1}, {7, 1}});
  const auto sol = ls::subset_sum_select(p, target_of({2, 1}));
  EXPECT_EQ(sol.chosen, (std::vector<int>{1}));
  EXPECT_EQ(sol.deficit_l1, 0);
}

TEST(SubsetSelect, ZeroTarget) {
  const auto sol = ls::subset_sum_select(profiles({{1, 2}, {3, 4}}), target_of({0, 0}));
  EXPECT_TRUE(sol.chosen.empty());
  EXPECT_EQ(sol.deficit_l1, 0);
}

TEST(SubsetSelect, TieBreaks) {
  // {0} alone and {1,2} both reach the target: fewer clusters wins.
  auto sol = ls::subset_sum_select(profiles({{2, 2}, {1, 1}, {1, 1}}), target_of({2, 2}));
  EXPECT_EQ(sol.chosen, (std::vector<int>{0}));
  // Four two-cluster solutions; the lexicographically smallest wins.
  sol = ls::subset_sum_select(profiles({{1, 0}, {1, 0}, {0, 1}, {0, 1}}), target_of({1, 1}));
  EXPECT_EQ(sol.chosen, (std::vector<int>{0, 2}));
}

TEST(SubsetSelect, BruteForceOracle) {
  ls::CounterRng rng(2024, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.below(12);
    const std::size_t classes = 2 + rng.below(3);
    std::vector<std::vector<std::int64_t>> counts(m, std::vector<std::int64_t>(classes));
    std::vector<std::int64_t> totals(classes, 0);
    for (auto& row : counts) {
      for (std::size_t c = 0; c < classes; ++c) {
        row[c] = static_cast<std::int64_t>(rng.below(rng.below(2) ? 4 : 30));
        totals[c] += row[c];
      }
    }
    std::vector<std::size_t> t(classes);
    std::vector<std::int64_t> t64(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      t64[c] = static_cast<std::int64_t>(rng.below(totals[c] + 1));
      t[c] = static_cast<std::size_t>(t64[c]);
    }
    const auto sol = ls::subset_sum_select(profiles(counts), target_of(t));
    const auto best = ls::oracle::subset_sum(counts, t64);
    ASSERT_EQ(sol.deficit_l1, best.deficit_l1) << "trial " << trial;
    ASSERT_EQ(sol.chosen, best.chosen) << "trial " << trial;
    for (std::size_t c = 0; c < classes; ++c) {
      ASSERT_LE(sol.achieved[c], t64[c]);
      ASSERT_EQ(sol.deficit[c], t64[c] - sol.achieved[c]);
    }
  }
}

TEST(SubsetSelect, DuplicatingAChosenClusterNeverHurts) {
  ls::CounterRng rng(77, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<std::int64_t>> counts(6, std::vector<std::int64_t>(2));
    for (auto& row : counts) {
      row[0] = static_cast<std::int64_t>(rng.below(10));
      row[1] = static_cast<std::int64_t>(rng.below(10));
    }
    const auto t = target_of({rng.below(25), rng.below(25)});
    const auto sol = ls::subset_sum_select(profiles(counts), t);
    if (sol.chosen.empty()) continue;
    counts.push_back(counts[sol.chosen.front()]);
    EXPECT_LE(ls::subset_sum_select(profiles(counts), t).deficit_l1, sol.deficit_l1);
  }
}

TEST(SubsetSplit, PlantedBlobsChooseFive) {
  std::vector<std::size_t> blob_of;
  const auto ds = five_blobs(blob_of);
  const auto target = ls::compute_target(ds, 0.1);
  ASSERT_EQ(target.per_class, (std::vector<std::size_t>{22, 22}));
  ls::KMeansConfig cfg;
  cfg.k_min = 3;
  cfg.k_max = 8;
  const auto sweep = ls::kmeans_sweep_seed(ds, cfg, 42);
  const auto out = ls::subset_sum_split(ds, sweep, target, 0);
  EXPECT_EQ(out.split.k_chosen, 5);
  EXPECT_EQ(out.split.individual_topups, 0);
  // The search stops at the first exact k.
  EXPECT_EQ(out.sweep.back().k, 5);
  for (const auto& entry : out.sweep) {
    const auto best = ls::oracle::subset_sum(
        [&] {
          std::vector<std::vector<std::int64_t>> c;
          for (const auto& p : ls::build_profiles(ds, sweep[entry.k - 3])) c.push_back(p.counts);
          return c;
        }(),
        {22, 22});
    EXPECT_EQ(entry.solution.deficit_l1, best.deficit_l1) << "k=" << entry.k;
    if (entry.k < 5) {
      EXPECT_GT(entry.solution.deficit_l1, 0);
    }
  }
  std::set<std::string> expected;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (blob_of[i] == 4) expected.insert(ds.id(i));
  }
  EXPECT_EQ(std::set<std::string>(out.split.test_ids.begin(), out.split.test_ids.end()),
            expected);
}

TEST(SubsetSplit, ThreeClassExactCountsWholeClustersDeterministic) {
  ls::testing::BlobSpec spec;
  spec.n = 2000;
  spec.classes = 3;
  spec.blobs = 9;
  spec.dim = 8;
  spec.class_weights = {0.5, 0.3, 0.2};
  spec.seed = 4;
  const auto ds = ls::testing::make_blobs(spec);
  const auto target = ls::compute_target(ds, 0.1);
  ls::KMeansConfig cfg;
  cfg.k_max = 12;
  cfg.n_init = 3;
  const auto sweep = ls::kmeans_sweep_seed(ds, cfg, 62);
  const auto out = ls::subset_sum_split(ds, sweep, target, 5);
  const auto applied = ls::apply_split(ds, out.split);
  EXPECT_EQ(ls::test_class_counts(ds, applied), target.per_class);
  EXPECT_EQ(applied.train.size() + applied.test.size(), ds.size());

  // Every chosen cluster is entirely in test; non-chosen, non-completion
  // clusters are entirely in train.
  const auto& winner = sweep[*out.split.k_chosen - cfg.k_min];
  std::vector<bool> in_test(ds.size(), false);
  for (const auto i : applied.test) in_test[i] = true;
  std::set<int> chosen(out.chosen.chosen.begin(), out.chosen.chosen.end());
  std::set<int> completion(out.completion_clusters.begin(), out.completion_clusters.end());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int c = static_cast<int>(winner.assignments[i]);
    if (chosen.count(c)) {
      ASSERT_TRUE(in_test[i]);
    } else if (!completion.count(c)) {
      ASSERT_FALSE(in_test[i]);
    }
  }
  std::int64_t deficit = 0;
  for (const auto& [label, d] : out.split.deficit) deficit += d;
  EXPECT_EQ(deficit, out.split.individual_topups);
  EXPECT_EQ(out.split, ls::subset_sum_split(ds, sweep, target, 5).split);
}

TEST(SubsetSplit, InfeasibleTarget) {
  std::vector<std::size_t> blob_of;
  const auto ds = five_blobs(blob_of);
  ls::KMeansConfig cfg;
  cfg.k_min = cfg.k_max = 3;
  cfg.n_init = 1;
  const auto sweep = ls::kmeans_sweep_seed(ds, cfg, 42);
  ls::SplitTarget t = target_of({300, 0});
  try {
    ls::subset_sum_split(ds, sweep, t, 0);
    FAIL() << "expected infeasible";
  } catch (const ls::Error& e) {
    EXPECT_EQ(e.kind(), ls::ErrorKind::kInfeasible);
  }
}
