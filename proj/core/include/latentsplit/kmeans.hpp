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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentsplit/dataset.hpp"

namespace latentsplit {

/// Lloyd k-means settings. Defaults sweep k = 3..50 with 10 k-means++
/// initialisations of at most 300 iterations for each of the seeds 42, 62, 82.
struct KMeansConfig {
  int k_min = 3;
  int k_max = 50;
  int n_init = 10;
  int max_iter = 300;
  std::vector<std::uint64_t> seeds{42, 62, 82};
  /// Stop once no centroid moves farther than this (Euclidean).
  double tolerance = 1e-4;

  void validate() const;
  std::string digest() const;
};

struct Clustering {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> assignments;
  /// k x d, row-major.
  std::vector<double> centroids;
  std::size_t dim = 0;
  /// Sum of squared distances of points to their assigned centroid.
  double inertia = 0.0;
  int iterations_run = 0;
  /// Inertia after each assignment step of the winning initialisation.
  std::vector<double> inertia_history;

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
  std::vector<std::size_t> cluster_sizes() const;

  bool operator==(const Clustering&) const = default;
};

/// Best-of-n_init Lloyd k-means with k-means++ seeding. Initialisation i
/// draws from CounterRng(seed, i), so the result is a pure function of
/// (points, k, seed, config). Clusters that empty during iteration are
/// reseeded at the point farthest from its assigned centroid.
Clustering kmeans(const MatrixView& points, int k, std::uint64_t seed,
                  const KMeansConfig& config);
Clustering kmeans(const Dataset& dataset, int k, std::uint64_t seed,
                  const KMeansConfig& config);

/// File-backed memo of k-means runs keyed by (dataset digest, k, seed,
/// config digest).
class ClusteringCache {
 public:
  explicit ClusteringCache(std::filesystem::path directory);

  std::optional<Clustering> load(const std::string& dataset_digest, int k,
                                 std::uint64_t seed,
                                 const KMeansConfig& config) const;
  void store(const std::string& dataset_digest, const KMeansConfig& config,
             const Clustering& clustering) const;

 private:
  std::filesystem::path path_for(const std::string& dataset_digest, int k,
                                 std::uint64_t seed,
                                 const KMeansConfig& config) const;
  std::filesystem::path directory_;
};

/// Runs every k in [k_min, k_max] for one seed, ordered by k.
std::vector<Clustering> kmeans_sweep_seed(const Dataset& dataset,
                                          const KMeansConfig& config,
                                          std::uint64_t seed, unsigned jobs = 1,
                                          const ClusteringCache* cache = nullptr);

/// Runs every (k, seed) pair, ordered by seed (config order) then k.
std::vector<Clustering> kmeans_sweep(const Dataset& dataset,
                                     const KMeansConfig& config,
                                     unsigned jobs = 1,
                                     const ClusteringCache* cache = nullptr);

/// Sum of squared distances to the assigned centroids.
double compute_inertia(const MatrixView& points,
                       std::span<const std::uint32_t> assignments,
                       std::span<const double> centroids);

}  // namespace latentsplit
