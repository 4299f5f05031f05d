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

#include "latentsplit/subset_sum.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "latentsplit/digest.hpp"
#include "latentsplit/error.hpp"
#include "latentsplit/random.hpp"

namespace latentsplit {

std::vector<ClusterProfile> build_profiles(const Dataset& dataset,
                                           const Clustering& clustering) {
  if (clustering.assignments.size() != dataset.size()) {
    fail_validation("clustering does not match the dataset size");
  }
  std::vector<ClusterProfile> profiles(static_cast<std::size_t>(clustering.k));
  for (int c = 0; c < clustering.k; ++c) {
    profiles[c].cluster_index = c;
    profiles[c].counts.assign(dataset.num_classes(), 0);
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto& p = profiles[clustering.assignments[i]];
    ++p.counts[dataset.label(i)];
    ++p.size;
  }
  return profiles;
}

namespace {

/// Lattice state: achieved counts packed in mixed radix (target_c + 1),
/// plus the best cluster mask reaching it.
struct State {
  std::uint64_t key;
  std::uint64_t mask;
};

/// Fewer clusters first; equal counts compare ascending index lists, where
/// the lower-indexed set is the one owning the lowest differing bit.
bool better_mask(std::uint64_t a, std::uint64_t b) {
  const int pa = std::popcount(a);
  const int pb = std::popcount(b);
  if (pa != pb) return pa < pb;
  const std::uint64_t diff = a ^ b;
  return diff != 0 && (a & (diff & (~diff + 1))) != 0;
}

}  // namespace

SubsetSolution subset_sum_select(std::span<const ClusterProfile> profiles,
                                 const SplitTarget& target) {
  const auto classes = target.per_class.size();
  if (profiles.size() > 64) {
    fail_validation("subset sum supports at most 64 clusters per k");
  }

  // Sort by cluster index so mask bit order matches index order.
  std::vector<const ClusterProfile*> sorted;
  for (const auto& p : profiles) {
    if (p.counts.size() != classes) {
      fail_validation("cluster profile class count does not match the target");
    }
    sorted.push_back(&p);
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
    return a->cluster_index < b->cluster_index;
  });

  std::vector<std::uint64_t> stride(classes);
  std::uint64_t span = 1;
  for (std::size_t c = 0; c < classes; ++c) {
    stride[c] = span;
    const std::uint64_t radix = target.per_class[c] + 1;
    if (span > std::numeric_limits<std::uint64_t>::max() / radix) {
      fail_validation("subset sum target lattice too large");
    }
    span *= radix;
  }
  auto digit = [&](std::uint64_t key, std::size_t c) {
    return (key / stride[c]) % (target.per_class[c] + 1);
  };

  std::vector<State> states{{0, 0}};
  std::vector<State> shifted;
  std::vector<State> merged;
  for (std::size_t bit = 0; bit < sorted.size(); ++bit) {
    const auto& counts = sorted[bit]->counts;
    bool fits = sorted[bit]->size > 0;
    std::uint64_t offset = 0;
    for (std::size_t c = 0; c < classes && fits; ++c) {
      if (counts[c] < 0 ||
          static_cast<std::uint64_t>(counts[c]) > target.per_class[c]) {
        fits = false;
      } else {
        offset += static_cast<std::uint64_t>(counts[c]) * stride[c];
      }
    }
    if (!fits) continue;

    shifted.clear();
    for (const auto& s : states) {
      bool ok = true;
      for (std::size_t c = 0; c < classes; ++c) {
        if (digit(s.key, c) + static_cast<std::uint64_t>(counts[c]) >
            target.per_class[c]) {
          ok = false;
          break;
        }
      }
      if (ok) shifted.push_back({s.key + offset, s.mask | (std::uint64_t{1} << bit)});
    }

    // Both lists are sorted by key; merge keeping the better mask per key.
    merged.clear();
    merged.reserve(states.size() + shifted.size());
    std::size_t i = 0, j = 0;
    while (i < states.size() || j < shifted.size()) {
      if (j == shifted.size() ||
          (i < states.size() && states[i].key < shifted[j].key)) {
        merged.push_back(states[i++]);
      } else if (i == states.size() || shifted[j].key < states[i].key) {
        merged.push_back(shifted[j++]);
      } else {
        merged.push_back(better_mask(shifted[j].mask, states[i].mask) ? shifted[j]
                                                                      : states[i]);
        ++i;
        ++j;
      }
    }
    states.swap(merged);
  }

  const State* best = nullptr;
  std::int64_t best_deficit = 0;
  const auto total = static_cast<std::int64_t>(
      std::accumulate(target.per_class.begin(), target.per_class.end(), std::size_t{0}));
  for (const auto& s : states) {
    std::int64_t achieved = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      achieved += static_cast<std::int64_t>(digit(s.key, c));
    }
    const auto deficit = total - achieved;
    if (!best || deficit < best_deficit ||
        (deficit == best_deficit && better_mask(s.mask, best->mask))) {
      best = &s;
      best_deficit = deficit;
    }
  }

  SubsetSolution sol;
  sol.achieved.assign(classes, 0);
  sol.deficit.assign(classes, 0);
  for (std::size_t bit = 0; bit < sorted.size(); ++bit) {
    if (best->mask >> bit & 1) sol.chosen.push_back(sorted[bit]->cluster_index);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    sol.achieved[c] = static_cast<std::int64_t>(digit(best->key, c));
    sol.deficit[c] = static_cast<std::int64_t>(target.per_class[c]) - sol.achieved[c];
    sol.deficit_l1 += sol.deficit[c];
  }
  return sol;
}

SubsetSumOutcome subset_sum_split(const Dataset& dataset,
                                  std::span<const Clustering> clusterings,
                                  const SplitTarget& target, std::uint64_t seed) {
  if (clusterings.empty()) fail_validation("subset-sum split needs at least one clustering");
  for (std::size_t c = 0; c < target.per_class.size() && c < dataset.num_classes(); ++c) {
    if (target.per_class[c] > dataset.class_counts()[c]) {
      fail_infeasible("target asks for " + std::to_string(target.per_class[c]) +
                      " test examples of class '" + dataset.labels()[c] +
                      "' but only " + std::to_string(dataset.class_counts()[c]) + " exist");
    }
  }
  target.validate(dataset.class_counts());
  const auto cluster_seed = clusterings.front().seed;
  std::vector<const Clustering*> by_k;
  for (const auto& c : clusterings) {
    if (c.seed != cluster_seed) {
      fail_validation("subset-sum split expects clusterings from a single seed");
    }
    by_k.push_back(&c);
  }
  std::stable_sort(by_k.begin(), by_k.end(),
                   [](auto* a, auto* b) { return a->k < b->k; });

  SubsetSumOutcome out;
  const Clustering* winner = nullptr;
  for (const auto* clustering : by_k) {
    const auto profiles = build_profiles(dataset, *clustering);
    auto sol = subset_sum_select(profiles, target);
    const bool improves = !winner || sol.deficit_l1 < out.chosen.deficit_l1;
    out.sweep.push_back({clustering->k, sol});
    if (improves) {
      winner = clustering;
      out.chosen = std::move(sol);
    }
    if (out.chosen.deficit_l1 == 0) break;
  }

  // Whole chosen clusters go to test.
  std::vector<bool> in_test(dataset.size(), false);
  std::vector<bool> chosen_cluster(static_cast<std::size_t>(winner->k), false);
  for (const int c : out.chosen.chosen) chosen_cluster[c] = true;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (chosen_cluster[winner->assignments[i]]) in_test[i] = true;
  }

  // Completion from randomly ordered non-chosen clusters.
  auto need = out.chosen.deficit;
  std::int64_t topups = 0;
  if (out.chosen.deficit_l1 > 0) {
    std::vector<int> order;
    for (int c = 0; c < winner->k; ++c) {
      if (!chosen_cluster[c]) order.push_back(c);
    }
    CounterRng order_rng(seed, 0);
    shuffle(std::span(order), order_rng);

    std::vector<std::vector<std::vector<std::size_t>>> members(
        static_cast<std::size_t>(winner->k),
        std::vector<std::vector<std::size_t>>(dataset.num_classes()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      members[winner->assignments[i]][dataset.label(i)].push_back(i);
    }

    std::uint64_t draw_stream = 1;
    for (const int cluster : order) {
      bool used = false;
      for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
        if (need[c] == 0) continue;
        auto& pool = members[cluster][c];
        const auto take = std::min<std::size_t>(pool.size(), need[c]);
        if (take == 0) continue;
        CounterRng draw_rng(seed, draw_stream++);
        for (const auto row : sample_without_replacement(pool, take, draw_rng)) {
          in_test[row] = true;
        }
        need[c] -= static_cast<std::int64_t>(take);
        topups += static_cast<std::int64_t>(take);
        used = true;
      }
      if (used) out.completion_clusters.push_back(cluster);
      if (std::all_of(need.begin(), need.end(), [](auto v) { return v == 0; })) break;
    }
    if (std::any_of(need.begin(), need.end(), [](auto v) { return v > 0; })) {
      fail_infeasible("subset-sum completion ran out of examples");
    }
  }

  out.split = make_split(dataset, in_test, SplitMethod::kSubsetSum);
  out.split.k_chosen = winner->k;
  out.split.cluster_seed = cluster_seed;
  out.split.split_seed = seed;
  out.split.individual_topups = topups;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    out.split.deficit[dataset.labels()[c]] = out.chosen.deficit[c];
  }
  return out;
}

}  // namespace latentsplit
