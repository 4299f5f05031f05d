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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "latentsplit/error.hpp"
#include "latentsplit/closest_split.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/random.hpp"
#include "latentsplit/subset_sum.hpp"
#include "latentsplit/targets.hpp"
#include "synthetic.hpp"

namespace ls = latentsplit;

namespace {

ls::CentroidGeometry geometry(const std::vector<std::vector<double>>& cs) {
  std::vector<double> flat;
  for (const auto& c : cs) flat.insert(flat.end(), c.begin(), c.end());
  return ls::CentroidGeometry::from_centroids(flat, cs.size(), cs[0].size());
}

// Four blobs on an arc of the xy circle plus one far off the arc (towards
// +z) holding exactly the 10% target.
struct Arc {
  ls::Dataset ds;
  std::vector<std::size_t> blob_of;
};

Arc arc_instance() {
  Arc a;
  ls::CounterRng rng(8, 0);
  std::vector<ls::EmbeddingRecord> r;
  for (std::size_t b = 0; b < 5; ++b) {
    const int half = b == 4 ? 22 : 50;
    std::vector<double> centre(3, 0.0);
    if (b < 4) {
      const double angle = static_cast<double>(b) * 20.0 * std::numbers::pi / 180.0;
      centre = {20 * std::cos(angle), 20 * std::sin(angle), 0.0};
    } else {
      centre = {0.0, 0.0, 20.0};
    }
    for (int i = 0; i < 2 * half; ++i) {
      std::vector<float> v(3);
      for (std::size_t j = 0; j < 3; ++j) {
        v[j] = static_cast<float>(centre[j] + 0.5 * ls::testing::normal(rng));
      }
      r.push_back({"arc" + std::to_string(b) + "_" + std::to_string(i), v,
                   i < half ? "A" : "B", {}, {}, {}, {}});
      a.blob_of.push_back(b);
    }
  }
  a.ds = ls::Dataset::from_records(r, 3);
  return a;
}

ls::Dataset three_class(std::uint64_t seed, double scale = 1.0) {
  ls::testing::BlobSpec spec;
  spec.n = 2000;
  spec.classes = 3;
  spec.blobs = 10;
  spec.dim = 8;
  spec.spread = 3.0;
  spec.class_weights = {0.5, 0.3, 0.2};
  spec.seed = seed;
  auto ds = ls::testing::make_blobs(spec);
  if (scale == 1.0) return ds;
  auto recs = ds.records();
  for (auto& rec : recs) {
    for (auto& x : rec.vector) x = static_cast<float>(x * scale);
  }
  return ls::Dataset::from_records(recs, ds.dim());
}

ls::KMeansConfig sweep_config() {
  ls::KMeansConfig cfg;
  cfg.k_min = 3;
  cfg.k_max = 14;
  cfg.n_init = 3;
  return cfg;
}

}  // namespace

TEST(Farthest, TwoClustersTieToIndexZero) {
  const auto g = geometry({{1, 0}, {0, 1}});
  EXPECT_EQ(ls::farthest_cluster(g, {true, true}), 0u);
  EXPECT_EQ(ls::farthest_cluster(g, {true, true}, ls::FarthestRule::kMinDistance), 0u);
}

TEST(Farthest, OppositeVectorWins) {
  const double t = 10.0 * std::numbers::pi / 180.0;
  const auto g = geometry({{1, 0}, {std::cos(t), std::sin(t)}, {-1, 0}});
  // Mean cosine distances by hand: (1 - cos t + 2) / 2 for the first two,
  // (2 + 1 + cos t) / 2 for -e1.
  const auto scores = ls::farthest_scores(g, ls::FarthestRule::kMeanDistance);
  EXPECT_NEAR(scores[0], (3 - std::cos(t)) / 2, 1e-12);
  EXPECT_NEAR(scores[2], (3 + std::cos(t)) / 2, 1e-12);
  EXPECT_EQ(ls::farthest_cluster(g, {true, true, true}), 2u);
  EXPECT_EQ(ls::farthest_cluster(g, {true, true, false}), 0u);
  EXPECT_EQ(ls::farthest_cluster(g, {true, true, true}, ls::FarthestRule::kMinDistance), 2u);
}

TEST(Farthest, IdenticalCentroidsAndErrors) {
  const auto g = geometry({{2, 3}, {2, 3}, {2, 3}});
  EXPECT_EQ(ls::farthest_cluster(g, {true, true, true}), 0u);
  EXPECT_THROW(ls::farthest_cluster(g, {false, false, false}), ls::Error);
  EXPECT_THROW(ls::farthest_cluster(geometry({{1, 1}}), {true}), ls::Error);
}

TEST(Geometry, SymmetricUnitDiagonalZeroNorm) {
  const auto g = geometry({{1, 2, 3}, {-3, 0.5, 2}, {0, 0, 0}, {4, 4, -1}});
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      EXPECT_EQ(g.cos(a, b), g.cos(b, a));
      EXPECT_GE(g.cos(a, b), -1.0);
      EXPECT_LE(g.cos(a, b), 1.0);
    }
  }
  EXPECT_EQ(g.cos(0, 0), 1.0);
  EXPECT_EQ(g.cos(1, 2), -1.0);
  EXPECT_TRUE(g.zero_norm[2]);
  const std::vector<double> z{0, 0}, e{1, 0};
  EXPECT_EQ(ls::cosine_similarity(z, e), -1.0);
}

TEST(ClosestSplit, DisplacedBlobSeedsWithoutRejections) {
  const auto arc = arc_instance();
  const auto target = ls::compute_target(arc.ds, 0.1);
  ASSERT_EQ(target.per_class, (std::vector<std::size_t>{22, 22}));
  const auto clustering = ls::kmeans(arc.ds, 5, 42, ls::KMeansConfig{});
  const auto run = ls::closest_split_for_k(arc.ds, clustering, target);
  ASSERT_TRUE(run.feasible);
  EXPECT_EQ(run.individual_topups, 0);
  ASSERT_EQ(run.trace.events.size(), 1u);
  EXPECT_EQ(run.trace.events[0].kind, ls::TraceEvent::Kind::kAddedCluster);
  for (std::size_t i = 0; i < arc.ds.size(); ++i) {
    EXPECT_EQ(run.in_test[i], arc.blob_of[i] == 4) << arc.ds.id(i);
  }
}

TEST(ClosestSplit, ThreeClassTargetAndWholeClusters) {
  const auto ds = three_class(21);
  const auto target = ls::compute_target(ds, 0.1);
  const auto sweep = ls::kmeans_sweep_seed(ds, sweep_config(), 42);
  const auto out = ls::closest_split(ds, sweep, target, 0);
  const auto applied = ls::apply_split(ds, out.split);
  EXPECT_EQ(ls::test_class_counts(ds, applied), target.per_class);
  EXPECT_EQ(applied.train.size() + applied.test.size(), ds.size());

  const auto& winner = sweep[*out.split.k_chosen - 3];
  std::set<std::string> topped;
  std::set<int> added;
  for (const auto& e : out.trace.events) {
    if (e.kind == ls::TraceEvent::Kind::kAddedExample) topped.insert(e.id);
    if (e.kind == ls::TraceEvent::Kind::kAddedCluster) added.insert(e.cluster);
  }
  EXPECT_EQ(static_cast<std::int64_t>(topped.size()), out.split.individual_topups);
  std::vector<bool> in_test(ds.size(), false);
  for (const auto i : applied.test) in_test[i] = true;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!in_test[i] || topped.count(ds.id(i))) continue;
    // A non-topup test member: its whole cluster is in test.
    const auto c = winner.assignments[i];
    ASSERT_TRUE(added.count(static_cast<int>(c)));
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (winner.assignments[j] == c) {
        ASSERT_TRUE(in_test[j]);
      }
    }
  }
}

TEST(ClosestSplit, TraceReplayAndJsonRoundTrip) {
  const auto ds = three_class(5);
  const auto target = ls::compute_target(ds, 0.1);
  const auto sweep = ls::kmeans_sweep_seed(ds, sweep_config(), 62);
  for (const auto quota : {ls::QuotaMode::kPerClass, ls::QuotaMode::kTotalOnly}) {
    const auto out = ls::closest_split(ds, sweep, target, 1, {{}, quota, 2});
    const auto back = ls::trace_from_json(ls::trace_to_json(out.trace));
    EXPECT_EQ(back, out.trace);
    auto replayed = ls::replay_trace(back, ds, sweep[*out.split.k_chosen - 3]);
    auto expected = out.split.test_ids;
    std::sort(replayed.begin(), replayed.end());
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(replayed, expected);
    EXPECT_EQ(ls::test_class_counts(ds, ls::apply_split(ds, out.split)), target.per_class);
  }
}

TEST(ClosestSplit, AccretionFollowsSingleLinkageAndQuotas) {
  // Re-derive each accretion step from the trace: the added cluster fits the
  // remaining quotas and has the highest max-cosine link to the test
  // clusters among remaining fitting clusters (ties to the lower index).
  const auto ds = three_class(9);
  const auto target = ls::compute_target(ds, 0.1);
  const auto sweep = ls::kmeans_sweep_seed(ds, sweep_config(), 82);
  for (const auto& clustering : sweep) {
    const auto run = ls::closest_split_for_k(ds, clustering, target);
    if (!run.feasible) continue;
    const auto profiles = ls::build_profiles(ds, clustering);
    const auto g = ls::CentroidGeometry::from_clustering(clustering);
    std::vector<std::int64_t> quota(target.per_class.begin(), target.per_class.end());
    std::vector<int> state(clustering.k, 0);  // 0 remaining, 1 test, 2 rejected
    for (int c = 0; c < clustering.k; ++c) {
      if (profiles[c].size == 0) state[c] = 2;
    }
    auto fits = [&](int c) {
      std::int64_t left = 0;
      for (auto q : quota) left += q;
      if (profiles[c].size > left) return false;
      for (std::size_t l = 0; l < quota.size(); ++l) {
        if (profiles[c].counts[l] > quota[l]) return false;
      }
      return true;
    };
    bool first = true;
    for (const auto& e : run.trace.events) {
      if (e.kind == ls::TraceEvent::Kind::kRejectedCluster) {
        ASSERT_FALSE(fits(e.cluster));
        state[e.cluster] = 2;
      } else if (e.kind == ls::TraceEvent::Kind::kAddedCluster) {
        ASSERT_TRUE(fits(e.cluster));
        if (!first) {
          double best = -3;
          int arg = -1;
          for (int c = 0; c < clustering.k; ++c) {
            if (state[c] != 0 || !fits(c)) continue;
            double link = -2;
            for (int t = 0; t < clustering.k; ++t) {
              if (state[t] == 1) link = std::max(link, g.cos(c, t));
            }
            if (link > best) {
              best = link;
              arg = c;
            }
          }
          ASSERT_EQ(arg, e.cluster) << "k=" << clustering.k;
        }
        first = false;
        state[e.cluster] = 1;
        for (std::size_t l = 0; l < quota.size(); ++l) {
          quota[l] -= profiles[e.cluster].counts[l];
          ASSERT_GE(quota[l], 0);
        }
      }
    }
  }
}

TEST(ClosestSplit, ChosenKMinimisesTopups) {
  const auto ds = three_class(13);
  const auto target = ls::compute_target(ds, 0.1);
  const auto sweep = ls::kmeans_sweep_seed(ds, sweep_config(), 42);
  const auto out = ls::closest_split(ds, sweep, target, 0);
  std::int64_t best = -1;
  int best_k = 0;
  for (const auto& clustering : sweep) {
    const auto run = ls::closest_split_for_k(ds, clustering, target);
    if (!run.feasible) continue;
    if (best < 0 || run.individual_topups < best) {
      best = run.individual_topups;
      best_k = clustering.k;
    }
  }
  EXPECT_EQ(out.split.individual_topups, best);
  EXPECT_EQ(out.split.k_chosen, best_k);
}

TEST(ClosestSplit, ScaleInvariance) {
  const auto ds = three_class(17);
  const auto scaled = three_class(17, 2.0);
  const auto target = ls::compute_target(ds, 0.1);
  const auto a = ls::closest_split(ds, ls::kmeans_sweep_seed(ds, sweep_config(), 42),
                                   target, 0);
  const auto b = ls::closest_split(scaled,
                                   ls::kmeans_sweep_seed(scaled, sweep_config(), 42),
                                   target, 0);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.split.test_ids, b.split.test_ids);

  // Same clustering, arbitrary positive factor on vectors and centroids.
  auto clustering = ls::kmeans(ds, 8, 42, sweep_config());
  const auto base = ls::closest_split_for_k(ds, clustering, target);
  const auto factor = 3.7;
  auto recs = ds.records();
  for (auto& r : recs) {
    for (auto& x : r.vector) x = static_cast<float>(x * factor);
  }
  const auto ds2 = ls::Dataset::from_records(recs, ds.dim());
  for (auto& c : clustering.centroids) c *= factor;
  const auto moved = ls::closest_split_for_k(ds2, clustering, target);
  EXPECT_EQ(base.trace, moved.trace);
}

TEST(ClosestSplit, Determinism) {
  const auto ds = three_class(3);
  const auto target = ls::compute_target(ds, 0.1);
  const auto sweep = ls::kmeans_sweep_seed(ds, sweep_config(), 42);
  const auto a = ls::closest_split(ds, sweep, target, 0, {{}, {}, 1});
  const auto b = ls::closest_split(ds, sweep, target, 0, {{}, {}, 3});
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.split, b.split);
}

TEST(ClosestSplit, InfeasibleNamesTightestQuota) {
  // Target of one example; every cluster is larger.
  std::vector<ls::EmbeddingRecord> r;
  for (int i = 0; i < 12; ++i) {
    r.push_back({"x" + std::to_string(i),
                 {static_cast<float>(i / 4 * 10), static_cast<float>(i % 4 == 0)},
                 i % 2 ? "A" : "B", {}, {}, {}, {}});
  }
  const auto ds = ls::Dataset::from_records(r, 2);
  ls::SplitTarget t;
  t.total = 1;
  t.per_class = {0, 1};
  ls::KMeansConfig cfg;
  cfg.k_min = cfg.k_max = 3;
  const auto sweep = ls::kmeans_sweep_seed(ds, cfg, 42);
  try {
    ls::closest_split(ds, sweep, t, 0);
    FAIL();
  } catch (const ls::Error& e) {
    EXPECT_EQ(e.kind(), ls::ErrorKind::kInfeasible);
    EXPECT_NE(std::string(e.what()).find("quota"), std::string::npos) << e.what();
  }
}

TEST(ClosestSplit, SwitchParsing) {
  EXPECT_EQ(ls::parse_farthest_rule("min"), ls::FarthestRule::kMinDistance);
  EXPECT_EQ(ls::parse_quota_mode("total_only"), ls::QuotaMode::kTotalOnly);
  EXPECT_EQ(ls::to_string(ls::FarthestRule::kMeanDistance), "mean");
  EXPECT_THROW(ls::parse_quota_mode("loose"), ls::Error);
}
