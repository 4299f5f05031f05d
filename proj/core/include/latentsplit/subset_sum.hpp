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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "latentsplit/dataset.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/split.hpp"
#include "latentsplit/targets.hpp"

namespace latentsplit {

/// Per-class composition of one cluster.
struct ClusterProfile {
  int cluster_index = 0;
  std::vector<std::int64_t> counts;
  std::int64_t size = 0;
};

std::vector<ClusterProfile> build_profiles(const Dataset& dataset,
                                           const Clustering& clustering);

/// A set of whole clusters that never overshoots any class quota.
struct SubsetSolution {
  /// Cluster indices, ascending.
  std::vector<int> chosen;
  std::vector<std::int64_t> achieved;
  std::vector<std::int64_t> deficit;
  std::int64_t deficit_l1 = 0;
};

/// Exact multidimensional subset sum: among subsets with achieved <= target
/// in every class, minimises the total shortfall, then the number of
/// clusters, then the ascending index list lexicographically. At most 64
/// profiles.
SubsetSolution subset_sum_select(std::span<const ClusterProfile> profiles,
                                 const SplitTarget& target);

struct SubsetSumSweepEntry {
  int k = 0;
  SubsetSolution solution;
};

struct SubsetSumOutcome {
  SplitResult split;
  /// Solutions for every k that was evaluated, ascending k. Evaluation stops
  /// at the first k reaching zero deficit.
  std::vector<SubsetSumSweepEntry> sweep;
  SubsetSolution chosen;
  /// Clusters the completion step drew individual examples from, in order.
  std::vector<int> completion_clusters;
};

/// Picks the k with the smallest deficit (ties: smaller k), takes its clusters
/// as the test set, and completes each short class with examples drawn
/// uniformly from randomly ordered non-chosen clusters. All clusterings must
/// share one seed.
SubsetSumOutcome subset_sum_split(const Dataset& dataset,
                                  std::span<const Clustering> clusterings,
                                  const SplitTarget& target, std::uint64_t seed);

}  // namespace latentsplit
