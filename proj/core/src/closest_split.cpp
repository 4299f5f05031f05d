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

#include "latentsplit/closest_split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "latentsplit/error.hpp"
#include "latentsplit/parallel.hpp"
#include "latentsplit/subset_sum.hpp"

namespace latentsplit {

using nlohmann::json;

std::string_view to_string(FarthestRule rule) {
  return rule == FarthestRule::kMeanDistance ? "mean" : "min";
}

std::string_view to_string(QuotaMode mode) {
  return mode == QuotaMode::kPerClass ? "per_class" : "total_only";
}

FarthestRule parse_farthest_rule(std::string_view name) {
  if (name == "mean") return FarthestRule::kMeanDistance;
  if (name == "min") return FarthestRule::kMinDistance;
  fail_validation("unknown farthest rule '" + std::string(name) + "' (mean|min)");
}

QuotaMode parse_quota_mode(std::string_view name) {
  if (name == "per_class") return QuotaMode::kPerClass;
  if (name == "total_only") return QuotaMode::kTotalOnly;
  fail_validation("unknown quota mode '" + std::string(name) +
                  "' (per_class|total_only)");
}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

double clamp_cos(double c) { return std::clamp(c, -1.0, 1.0); }

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return -1.0;
  return clamp_cos(dot(a, b) / (na * nb));
}

CentroidGeometry CentroidGeometry::from_centroids(std::span<const double> centroids,
                                                  std::size_t k, std::size_t dim) {
  CentroidGeometry g;
  g.k = k;
  g.dim = dim;
  g.centroids.assign(centroids.begin(), centroids.end());
  g.pairwise_cos.assign(k * k, 0.0);
  g.zero_norm.assign(k, false);
  std::vector<double> norms(k);
  for (std::size_t a = 0; a < k; ++a) {
    norms[a] = norm(g.centroid(a));
    g.zero_norm[a] = norms[a] == 0.0;
  }
  for (std::size_t a = 0; a < k; ++a) {
    g.pairwise_cos[a * k + a] = g.zero_norm[a] ? -1.0 : 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      const double c = (g.zero_norm[a] || g.zero_norm[b])
                           ? -1.0
                           : clamp_cos(dot(g.centroid(a), g.centroid(b)) /
                                       (norms[a] * norms[b]));
      g.pairwise_cos[a * k + b] = c;
      g.pairwise_cos[b * k + a] = c;
    }
  }
  return g;
}

CentroidGeometry CentroidGeometry::from_clustering(const Clustering& clustering) {
  return from_centroids(clustering.centroids, static_cast<std::size_t>(clustering.k),
                        clustering.dim);
}

std::vector<double> farthest_scores(const CentroidGeometry& g, FarthestRule rule) {
  std::vector<double> scores(g.k, 0.0);
  if (g.k < 2) return scores;
  for (std::size_t a = 0; a < g.k; ++a) {
    double sum = 0.0;
    double nearest = 2.0;
    for (std::size_t b = 0; b < g.k; ++b) {
      if (a == b) continue;
      const double dist = 1.0 - g.cos(a, b);
      sum += dist;
      nearest = std::min(nearest, dist);
    }
    scores[a] = rule == FarthestRule::kMeanDistance
                    ? sum / static_cast<double>(g.k - 1)
                    : nearest;
  }
  return scores;
}

std::size_t farthest_cluster(const CentroidGeometry& geometry,
                             const std::vector<bool>& eligible, FarthestRule rule) {
  if (geometry.k < 2) fail_validation("farthest cluster needs at least 2 clusters");
  const auto scores = farthest_scores(geometry, rule);
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < geometry.k; ++c) {
    if (c < eligible.size() && eligible[c] && (!best || scores[c] > scores[*best])) {
      best = c;
    }
  }
  if (!best) fail_validation("farthest cluster: no eligible cluster");
  return *best;
}

namespace {

const char* kind_name(TraceEvent::Kind kind) {
  switch (kind) {
    case TraceEvent::Kind::kAddedCluster: return "added_cluster";
    case TraceEvent::Kind::kRejectedCluster: return "rejected_cluster";
    case TraceEvent::Kind::kAddedExample: return "added_example";
    case TraceEvent::Kind::kRemovedExample: return "removed_example";
  }
  return "?";
}

TraceEvent::Kind parse_kind(const std::string& name) {
  if (name == "added_cluster") return TraceEvent::Kind::kAddedCluster;
  if (name == "rejected_cluster") return TraceEvent::Kind::kRejectedCluster;
  if (name == "added_example") return TraceEvent::Kind::kAddedExample;
  if (name == "removed_example") return TraceEvent::Kind::kRemovedExample;
  fail_validation("unknown trace event '" + name + "'");
}

}  // namespace

std::string trace_to_json(const AccretionTrace& trace) {
  json events = json::array();
  for (const auto& e : trace.events) {
    json obj;
    obj["type"] = kind_name(e.kind);
    switch (e.kind) {
      case TraceEvent::Kind::kAddedCluster:
        obj["cluster"] = e.cluster;
        break;
      case TraceEvent::Kind::kRejectedCluster:
        obj["cluster"] = e.cluster;
        obj["reason"] = e.reason;
        break;
      case TraceEvent::Kind::kAddedExample:
      case TraceEvent::Kind::kRemovedExample:
        obj["id"] = e.id;
        obj["class"] = e.label;
        break;
    }
    events.push_back(std::move(obj));
  }
  json obj;
  obj["k"] = trace.k;
  obj["cluster_seed"] = trace.cluster_seed;
  obj["events"] = std::move(events);
  return obj.dump(1) + "\n";
}

AccretionTrace trace_from_json(std::string_view text) {
  AccretionTrace trace;
  try {
    const auto obj = json::parse(text);
    trace.k = obj.at("k").get<int>();
    trace.cluster_seed = obj.at("cluster_seed").get<std::uint64_t>();
    for (const auto& e : obj.at("events")) {
      TraceEvent ev;
      ev.kind = parse_kind(e.at("type").get<std::string>());
      if (e.contains("cluster")) ev.cluster = e["cluster"].get<int>();
      if (e.contains("reason")) ev.reason = e["reason"].get<std::string>();
      if (e.contains("id")) ev.id = e["id"].get<std::string>();
      if (e.contains("class")) ev.label = e["class"].get<std::string>();
      trace.events.push_back(std::move(ev));
    }
  } catch (const json::exception& e) {
    fail_validation(std::string("malformed trace file: ") + e.what());
  }
  return trace;
}

std::vector<std::string> replay_trace(const AccretionTrace& trace,
                                      const Dataset& dataset,
                                      const Clustering& clustering) {
  std::vector<bool> in_test(dataset.size(), false);
  for (const auto& e : trace.events) {
    switch (e.kind) {
      case TraceEvent::Kind::kAddedCluster:
        for (std::size_t i = 0; i < dataset.size(); ++i) {
          if (clustering.assignments[i] == static_cast<std::uint32_t>(e.cluster)) {
            in_test[i] = true;
          }
        }
        break;
      case TraceEvent::Kind::kRejectedCluster:
        break;
      case TraceEvent::Kind::kAddedExample:
      case TraceEvent::Kind::kRemovedExample: {
        const auto row = dataset.find(e.id);
        if (!row) fail_validation("trace references unknown id '" + e.id + "'");
        in_test[*row] = e.kind == TraceEvent::Kind::kAddedExample;
        break;
      }
    }
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (in_test[i]) ids.push_back(dataset.id(i));
  }
  return ids;
}

namespace {

class ClosestBuilder {
 public:
  ClosestBuilder(const Dataset& dataset, const Clustering& clustering,
                 const SplitTarget& target, const ClosestConfig& config)
      : ds_(dataset), clustering_(clustering), config_(config),
        k_(static_cast<std::size_t>(clustering.k)),
        profiles_(build_profiles(dataset, clustering)),
        geometry_(CentroidGeometry::from_clustering(clustering)) {
    quota_.assign(target.per_class.begin(), target.per_class.end());
    total_quota_ = static_cast<std::int64_t>(target.total);
    run_.k = clustering.k;
    run_.trace.k = clustering.k;
    run_.trace.cluster_seed = clustering.seed;
    run_.in_test.assign(dataset.size(), false);
  }

  ClosestRun build() {
    if (!seed()) return std::move(run_);
    accrete();
    run_.deficit.assign(ds_.num_classes(), 0);
    for (std::size_t c = 0; c < ds_.num_classes(); ++c) {
      run_.deficit[c] = std::max<std::int64_t>(quota_[c], 0);
    }
    if (config_.quota == QuotaMode::kTotalOnly) trim_surplus();
    top_up();
    run_.feasible = true;
    return std::move(run_);
  }

 private:
  /// Empty string when the cluster fits the remaining quotas.
  std::string violation(std::size_t cluster) const {
    const auto& p = profiles_[cluster];
    if (p.size > total_quota_) {
      return "exceeds total quota (" + std::to_string(p.size) + " > " +
             std::to_string(total_quota_) + ")";
    }
    if (config_.quota == QuotaMode::kPerClass) {
      for (std::size_t c = 0; c < quota_.size(); ++c) {
        if (p.counts[c] > quota_[c]) {
          return "exceeds quota for class '" + ds_.labels()[c] + "' (" +
                 std::to_string(p.counts[c]) + " > " + std::to_string(quota_[c]) + ")";
        }
      }
    }
    return {};
  }

  void add_cluster(std::size_t cluster) {
    state_[cluster] = kInTest;
    test_clusters_.push_back(cluster);
    const auto& p = profiles_[cluster];
    total_quota_ -= p.size;
    for (std::size_t c = 0; c < quota_.size(); ++c) quota_[c] -= p.counts[c];
    for (std::size_t i = 0; i < ds_.size(); ++i) {
      if (clustering_.assignments[i] == cluster) run_.in_test[i] = true;
    }
    run_.trace.events.push_back({TraceEvent::Kind::kAddedCluster,
                                 static_cast<int>(cluster), {}, {}, {}});
  }

  void reject(std::size_t cluster, std::string reason) {
    state_[cluster] = kRejected;
    run_.trace.events.push_back({TraceEvent::Kind::kRejectedCluster,
                                 static_cast<int>(cluster), std::move(reason), {}, {}});
  }

  bool seed() {
    state_.assign(k_, kRemaining);
    for (std::size_t c = 0; c < k_; ++c) {
      if (profiles_[c].size == 0) state_[c] = kEmpty;
    }
    const auto scores = farthest_scores(geometry_, config_.farthest);
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < k_; ++c) {
      if (state_[c] == kRemaining) order.push_back(c);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (const auto c : order) {
      auto why = violation(c);
      if (why.empty()) {
        add_cluster(c);
        return true;
      }
      reject(c, std::move(why));
    }
    run_.infeasible_reason = "no cluster fits the quotas at k = " + std::to_string(k_);
    return false;
  }

  void accrete() {
    // Single linkage against the original centroids of the test clusters.
    std::vector<double> link(k_, -2.0);
    auto absorb = [&](std::size_t t) {
      for (std::size_t c = 0; c < k_; ++c) link[c] = std::max(link[c], geometry_.cos(c, t));
    };
    absorb(test_clusters_.front());
    // Once the quota is full nothing non-empty fits; stop without rejecting.
    while (total_quota_ > 0) {
      std::vector<std::size_t> order;
      for (std::size_t c = 0; c < k_; ++c) {
        if (state_[c] == kRemaining) order.push_back(c);
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return link[a] > link[b]; });
      bool added = false;
      for (const auto c : order) {
        auto why = violation(c);
        if (why.empty()) {
          add_cluster(c);
          absorb(c);
          added = true;
          break;
        }
        // Quotas only shrink, so a cluster that does not fit never will.
        reject(c, std::move(why));
      }
      if (!added) return;
    }
  }

  /// Similarity of a row to its nearest test centroid.
  double link_score(std::size_t row, std::vector<double>& buffer) {
    const auto v = ds_.vector(row);
    std::copy(v.begin(), v.end(), buffer.begin());
    if (norm(buffer) == 0.0) {
      ++zero_norm_rows_;
      return -1.0;
    }
    double best = -1.0;
    for (const auto t : test_clusters_) {
      best = std::max(best, cosine_similarity(buffer, geometry_.centroid(t)));
    }
    return best;
  }

  struct Candidate {
    double score;
    std::size_t row;
  };

  std::vector<Candidate> candidates(std::size_t label, bool test_side) {
    std::vector<double> buffer(ds_.dim());
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < ds_.size(); ++i) {
      if (ds_.label(i) == label && run_.in_test[i] == test_side) {
        out.push_back({link_score(i, buffer), i});
      }
    }
    return out;
  }

  void trim_surplus() {
    for (std::size_t c = 0; c < quota_.size(); ++c) {
      if (quota_[c] >= 0) continue;
      auto pool = candidates(c, true);
      std::sort(pool.begin(), pool.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score < b.score;
        return ds_.id(a.row) < ds_.id(b.row);
      });
      const auto surplus = static_cast<std::size_t>(-quota_[c]);
      for (std::size_t i = 0; i < surplus; ++i) {
        const auto row = pool[i].row;
        run_.in_test[row] = false;
        run_.trace.events.push_back({TraceEvent::Kind::kRemovedExample, -1, {},
                                     ds_.id(row), ds_.labels()[c]});
        ++run_.individual_topups;
      }
      quota_[c] = 0;
    }
  }

  void top_up() {
    for (std::size_t c = 0; c < quota_.size(); ++c) {
      if (quota_[c] <= 0) continue;
      auto pool = candidates(c, false);
      std::sort(pool.begin(), pool.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return ds_.id(a.row) < ds_.id(b.row);
      });
      const auto need = static_cast<std::size_t>(quota_[c]);
      for (std::size_t i = 0; i < need; ++i) {
        const auto row = pool[i].row;
        run_.in_test[row] = true;
        run_.trace.events.push_back({TraceEvent::Kind::kAddedExample, -1, {},
                                     ds_.id(row), ds_.labels()[c]});
        ++run_.individual_topups;
      }
      quota_[c] = 0;
    }
    if (zero_norm_rows_ > 0) {
      run_.warnings.push_back(std::to_string(zero_norm_rows_) +
                              " zero-norm vectors treated as maximally distant");
    }
  }

  enum State : char { kRemaining, kInTest, kRejected, kEmpty };

  const Dataset& ds_;
  const Clustering& clustering_;
  const ClosestConfig& config_;
  std::size_t k_;
  std::vector<ClusterProfile> profiles_;
  CentroidGeometry geometry_;
  std::vector<std::int64_t> quota_;
  std::int64_t total_quota_ = 0;
  std::vector<State> state_;
  std::vector<std::size_t> test_clusters_;
  std::size_t zero_norm_rows_ = 0;
  ClosestRun run_;
};

/// Names the quota violated by the most clusters over all k.
std::string tightest_quota(const Dataset& dataset,
                           std::span<const Clustering> clusterings,
                           const SplitTarget& target, QuotaMode mode) {
  std::map<std::string, std::size_t> violations;
  std::size_t clusters = 0;
  for (const auto& clustering : clusterings) {
    for (const auto& p : build_profiles(dataset, clustering)) {
      if (p.size == 0) continue;
      ++clusters;
      if (p.size > static_cast<std::int64_t>(target.total)) {
        ++violations["total test size " + std::to_string(target.total)];
      }
      if (mode != QuotaMode::kPerClass) continue;
      for (std::size_t c = 0; c < p.counts.size(); ++c) {
        if (p.counts[c] > static_cast<std::int64_t>(target.per_class[c])) {
          ++violations["class '" + dataset.labels()[c] + "' quota " +
                       std::to_string(target.per_class[c])];
        }
      }
    }
  }
  std::string name = "none";
  std::size_t most = 0;
  for (const auto& [quota, count] : violations) {
    if (count > most) {
      most = count;
      name = quota;
    }
  }
  return name + " (violated by " + std::to_string(most) + " of " +
         std::to_string(clusters) + " clusters)";
}

}  // namespace

ClosestRun closest_split_for_k(const Dataset& dataset, const Clustering& clustering,
                               const SplitTarget& target,
                               const ClosestConfig& config) {
  target.validate(dataset.class_counts());
  if (clustering.assignments.size() != dataset.size()) {
    fail_validation("clustering does not match the dataset size");
  }
  return ClosestBuilder(dataset, clustering, target, config).build();
}

ClosestOutcome closest_split(const Dataset& dataset,
                             std::span<const Clustering> clusterings,
                             const SplitTarget& target, std::uint64_t seed,
                             const ClosestConfig& config) {
  if (clusterings.empty()) fail_validation("closest split needs at least one clustering");
  target.validate(dataset.class_counts());
  const auto cluster_seed = clusterings.front().seed;
  for (const auto& c : clusterings) {
    if (c.seed != cluster_seed) {
      fail_validation("closest split expects clusterings from a single seed");
    }
  }

  std::vector<ClosestRun> runs(clusterings.size());
  parallel_for(clusterings.size(), config.jobs, [&](std::size_t i) {
    runs[i] = closest_split_for_k(dataset, clusterings[i], target, config);
  });

  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return runs[a].k < runs[b].k; });

  ClosestOutcome out;
  const ClosestRun* best = nullptr;
  for (const auto i : order) {
    const auto& run = runs[i];
    if (!run.feasible) {
      out.infeasible_k.push_back(run.k);
      continue;
    }
    out.topups_by_k.emplace_back(run.k, run.individual_topups);
    if (!best || run.individual_topups < best->individual_topups) best = &run;
  }
  if (!best) {
    fail_infeasible("closest split: no k admits a seed cluster; tightest quota: " +
                    tightest_quota(dataset, clusterings, target, config.quota));
  }

  out.split = make_split(dataset, best->in_test, SplitMethod::kClosest);
  out.split.k_chosen = best->k;
  out.split.cluster_seed = cluster_seed;
  out.split.split_seed = seed;
  out.split.individual_topups = best->individual_topups;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    out.split.deficit[dataset.labels()[c]] = best->deficit[c];
  }
  out.trace = best->trace;
  out.warnings = best->warnings;
  return out;
}

}  // namespace latentsplit
