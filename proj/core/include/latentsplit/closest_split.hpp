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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latentsplit/dataset.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/split.hpp"
#include "latentsplit/targets.hpp"

namespace latentsplit {

/// How "farthest from all the other clusters" is scored.
enum class FarthestRule {
  kMeanDistance,  ///< largest mean cosine distance to the other centroids
  kMinDistance,   ///< largest distance to the nearest other centroid
};

/// Which quotas gate whole-cluster additions.
enum class QuotaMode {
  kPerClass,   ///< total and every per-class quota
  kTotalOnly,  ///< total only; surplus classes are trimmed afterwards
};

std::string_view to_string(FarthestRule rule);
std::string_view to_string(QuotaMode mode);
FarthestRule parse_farthest_rule(std::string_view name);
QuotaMode parse_quota_mode(std::string_view name);

struct ClosestConfig {
  FarthestRule farthest = FarthestRule::kMeanDistance;
  QuotaMode quota = QuotaMode::kPerClass;
  unsigned jobs = 1;
};

/// Cosine similarity with a zero vector is defined as -1.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct CentroidGeometry {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;
  /// k x k, symmetric.
  std::vector<double> pairwise_cos;
  std::vector<bool> zero_norm;

  static CentroidGeometry from_centroids(std::span<const double> centroids,
                                         std::size_t k, std::size_t dim);
  static CentroidGeometry from_clustering(const Clustering& clustering);

  double cos(std::size_t a, std::size_t b) const { return pairwise_cos[a * k + b]; }
  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
};

/// Per-cluster farthest score (higher = farther) under `rule`.
std::vector<double> farthest_scores(const CentroidGeometry& geometry,
                                    FarthestRule rule);

/// The eligible cluster with the highest score; ties go to the lowest index.
std::size_t farthest_cluster(const CentroidGeometry& geometry,
                             const std::vector<bool>& eligible,
                             FarthestRule rule = FarthestRule::kMeanDistance);

struct TraceEvent {
  enum class Kind { kAddedCluster, kRejectedCluster, kAddedExample, kRemovedExample };
  Kind kind = Kind::kAddedCluster;
  int cluster = -1;
  std::string reason;
  std::string id;
  std::string label;

  bool operator==(const TraceEvent&) const = default;
};

struct AccretionTrace {
  int k = 0;
  std::uint64_t cluster_seed = 0;
  std::vector<TraceEvent> events;

  bool operator==(const AccretionTrace&) const = default;
};

/// Rebuilds the test id set (dataset order) from a trace and the clustering
/// it was recorded against.
std::vector<std::string> replay_trace(const AccretionTrace& trace,
                                      const Dataset& dataset,
                                      const Clustering& clustering);

std::string trace_to_json(const AccretionTrace& trace);
AccretionTrace trace_from_json(std::string_view text);

/// Result of running the procedure for a single k.
struct ClosestRun {
  int k = 0;
  bool feasible = false;
  /// Why no seed cluster fit (empty when feasible).
  std::string infeasible_reason;
  std::vector<bool> in_test;
  std::vector<std::int64_t> deficit;
  std::int64_t individual_topups = 0;
  AccretionTrace trace;
  std::vector<std::string> warnings;
};

ClosestRun closest_split_for_k(const Dataset& dataset,
                               const Clustering& clustering,
                               const SplitTarget& target,
                               const ClosestConfig& config = {});

struct ClosestOutcome {
  SplitResult split;
  AccretionTrace trace;
  /// (k, individual_topups) for every feasible k, ascending k.
  std::vector<std::pair<int, std::int64_t>> topups_by_k;
  std::vector<int> infeasible_k;
  std::vector<std::string> warnings;
};

/// Runs every clustering (one seed) and keeps the k needing the fewest
/// individual additions, ties to the smaller k. Throws Error(kInfeasible)
/// when no k admits a seed cluster.
ClosestOutcome closest_split(const Dataset& dataset,
                             std::span<const Clustering> clusterings,
                             const SplitTarget& target, std::uint64_t seed,
                             const ClosestConfig& config = {});

}  // namespace latentsplit
