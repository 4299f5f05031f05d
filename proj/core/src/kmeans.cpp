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

#include "latentsplit/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "latentsplit/digest.hpp"
#include "latentsplit/error.hpp"
#include "latentsplit/io.hpp"
#include "latentsplit/parallel.hpp"
#include "latentsplit/random.hpp"

namespace latentsplit {

void KMeansConfig::validate() const {
  if (k_min < 1 || k_min > k_max) {
    fail_validation("k-means: need 1 <= k_min <= k_max");
  }
  if (n_init < 1) fail_validation("k-means: n_init must be >= 1");
  if (max_iter < 1) fail_validation("k-means: max_iter must be >= 1");
  if (!(tolerance >= 0.0)) fail_validation("k-means: tolerance must be >= 0");
  if (seeds.empty()) fail_validation("k-means: at least one seed is required");
}

std::string KMeansConfig::digest() const {
  std::ostringstream os;
  os.precision(17);
  os << "kmeans-lloyd-kpp/v1;n_init=" << n_init << ";max_iter=" << max_iter
     << ";tol=" << tolerance;
  return digest_hex(os.str());
}

std::vector<std::size_t> Clustering::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (const auto a : assignments) ++sizes[a];
  return sizes;
}

namespace {

inline double squared_distance(const double* a, const double* b, std::size_t d) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t j = 0;
  for (; j + 4 <= d; j += 4) {
    const double t0 = a[j] - b[j];
    const double t1 = a[j + 1] - b[j + 1];
    const double t2 = a[j + 2] - b[j + 2];
    const double t3 = a[j + 3] - b[j + 3];
    s0 += t0 * t0;
    s1 += t1 * t1;
    s2 += t2 * t2;
    s3 += t3 * t3;
  }
  for (; j < d; ++j) {
    const double t = a[j] - b[j];
    s0 += t * t;
  }
  return (s0 + s1) + (s2 + s3);
}

struct Run {
  std::vector<std::uint32_t> assignments;
  std::vector<double> centroids;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

class Lloyd {
 public:
  Lloyd(const MatrixView& points, int k)
      : n_(points.rows), d_(points.cols), k_(static_cast<std::size_t>(k)),
        x_(points.data.begin(), points.data.end()) {}

  Run run(CounterRng& rng, const KMeansConfig& config) {
    Run r;
    r.centroids = seed_plus_plus(rng);
    r.assignments.assign(n_, 0);
    dist_.assign(n_, 0.0);
    lower_.assign(n_ * k_, 0.0);

    full_assign(r.centroids, r.assignments);
    r.history.push_back(sum(dist_));
    while (r.iterations < config.max_iter) {
      ++r.iterations;
      const auto moved = update(r.centroids, r.assignments);
      const double shift = *std::max_element(moved.begin(), moved.end());
      const bool changed = pruned_assign(r.centroids, r.assignments, moved);
      r.history.push_back(sum(dist_));
      if (!changed || shift <= config.tolerance) break;
    }
    // Final centroids are the exact member means of the final assignment.
    recompute_means(r.centroids, r.assignments);
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      r.inertia += squared_distance(point(i), &r.centroids[r.assignments[i] * d_], d_);
    }
    return r;
  }

 private:
  const double* point(std::size_t i) const { return x_.data() + i * d_; }

  std::vector<double> seed_plus_plus(CounterRng& rng) const {
    std::vector<double> centroids(k_ * d_);
    std::vector<double> closest(n_, std::numeric_limits<double>::infinity());
    std::size_t chosen = static_cast<std::size_t>(rng.below(n_));
    for (std::size_t c = 0;; ++c) {
      std::copy_n(point(chosen), d_, centroids.begin() + c * d_);
      if (c + 1 == k_) break;
      double total = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        closest[i] = std::min(closest[i],
                              squared_distance(point(i), &centroids[c * d_], d_));
        total += closest[i];
      }
      if (total <= 0.0) {
        chosen = static_cast<std::size_t>(rng.below(n_));
        continue;
      }
      const double u = rng.uniform() * total;
      double acc = 0.0;
      chosen = n_ - 1;
      for (std::size_t i = 0; i < n_; ++i) {
        acc += closest[i];
        if (acc > u && closest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      // Guard against rounding at the tail landing on a zero-weight point.
      while (closest[chosen] <= 0.0 && chosen > 0) --chosen;
    }
    return centroids;
  }

  void full_assign(const std::vector<double>& centroids,
                   std::vector<std::uint32_t>& assignments) {
    for (std::size_t i = 0; i < n_; ++i) {
      const double* p = point(i);
      double* lo = &lower_[i * k_];
      std::uint32_t arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k_; ++c) {
        const double dc = squared_distance(p, &centroids[c * d_], d_);
        lo[c] = std::sqrt(dc);
        if (dc < best) {
          best = dc;
          arg = static_cast<std::uint32_t>(c);
        }
      }
      assignments[i] = arg;
      dist_[i] = best;
    }
  }

  /// Lloyd assignment with Elkan's triangle-inequality bounds. A centroid is
  /// skipped only when a bound shows it strictly farther than the current
  /// best (with a small margin against rounding), so the result is the same
  /// nearest-centroid choice, ties to the lowest index, as a full scan.
  bool pruned_assign(const std::vector<double>& centroids,
                     std::vector<std::uint32_t>& assignments,
                     const std::vector<double>& moved) {
    constexpr double kMargin = 1.0 - 1e-9;
    std::vector<double> half(k_ * k_, 0.0);
    std::vector<double> nearest(k_, std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < k_; ++a) {
      for (std::size_t b = a + 1; b < k_; ++b) {
        const double g =
            0.5 * std::sqrt(squared_distance(&centroids[a * d_], &centroids[b * d_], d_));
        half[a * k_ + b] = half[b * k_ + a] = g;
        nearest[a] = std::min(nearest[a], g);
        nearest[b] = std::min(nearest[b], g);
      }
    }

    bool changed = false;
    for (std::size_t i = 0; i < n_; ++i) {
      const double* p = point(i);
      double* lo = &lower_[i * k_];
      for (std::size_t c = 0; c < k_; ++c) lo[c] -= moved[c];

      std::uint32_t arg = assignments[i];
      double best = squared_distance(p, &centroids[arg * d_], d_);
      double upper = std::sqrt(best);
      lo[arg] = upper;
      if (upper < kMargin * nearest[arg]) {
        dist_[i] = best;
        continue;
      }
      for (std::size_t c = 0; c < k_; ++c) {
        if (c == arg) continue;
        if (upper < kMargin * std::max(lo[c], half[arg * k_ + c])) continue;
        const double dc = squared_distance(p, &centroids[c * d_], d_);
        lo[c] = std::sqrt(dc);
        if (dc < best || (dc == best && c < arg)) {
          best = dc;
          upper = lo[c];
          arg = static_cast<std::uint32_t>(c);
        }
      }
      dist_[i] = best;
      if (arg != assignments[i]) {
        assignments[i] = arg;
        changed = true;
      }
    }
    return changed;
  }

  static double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s;
  }

  std::vector<std::size_t> accumulate(std::vector<double>& sums,
                                      const std::vector<std::uint32_t>& a) const {
    std::vector<std::size_t> counts(k_, 0);
    sums.assign(k_ * d_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double* s = &sums[a[i] * d_];
      const double* p = point(i);
      for (std::size_t j = 0; j < d_; ++j) s[j] += p[j];
      ++counts[a[i]];
    }
    return counts;
  }

  void recompute_means(std::vector<double>& centroids,
                       const std::vector<std::uint32_t>& a) const {
    std::vector<double> sums;
    const auto counts = accumulate(sums, a);
    for (std::size_t c = 0; c < k_; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d_; ++j) {
        centroids[c * d_ + j] = sums[c * d_ + j] / static_cast<double>(counts[c]);
      }
    }
  }

  /// Moves centroids to member means (reseeding empty clusters at the point
  /// farthest from its centroid); returns each centroid's displacement.
  std::vector<double> update(std::vector<double>& centroids,
                             const std::vector<std::uint32_t>& a) const {
    std::vector<double> sums;
    const auto counts = accumulate(sums, a);
    std::vector<char> used(n_, 0);
    std::vector<double> moved(k_, 0.0);
    std::vector<double> next(d_);
    for (std::size_t c = 0; c < k_; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d_; ++j) {
          next[j] = sums[c * d_ + j] / static_cast<double>(counts[c]);
        }
      } else {
        std::size_t far = n_;
        for (std::size_t i = 0; i < n_; ++i) {
          if (!used[i] && (far == n_ || dist_[i] > dist_[far])) far = i;
        }
        if (far == n_) continue;
        used[far] = 1;
        std::copy_n(point(far), d_, next.begin());
      }
      moved[c] = std::sqrt(squared_distance(next.data(), &centroids[c * d_], d_));
      std::copy(next.begin(), next.end(), centroids.begin() + c * d_);
    }
    return moved;
  }

  std::size_t n_, d_, k_;
  std::vector<double> x_;
  std::vector<double> dist_;
  std::vector<double> lower_;  // n x k lower bounds on point-centroid distance
};

}  // namespace

double compute_inertia(const MatrixView& points,
                       std::span<const std::uint32_t> assignments,
                       std::span<const double> centroids) {
  const auto d = points.cols;
  std::vector<double> p(d);
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    const auto row = points.row(i);
    std::copy(row.begin(), row.end(), p.begin());
    total += squared_distance(p.data(), &centroids[assignments[i] * d], d);
  }
  return total;
}

Clustering kmeans(const MatrixView& points, int k, std::uint64_t seed,
                  const KMeansConfig& config) {
  if (points.rows == 0) fail_validation("k-means: empty dataset");
  if (points.cols == 0) fail_validation("k-means: dimension must be >= 1");
  if (k < 1) fail_validation("k-means: k must be >= 1");
  if (static_cast<std::size_t>(k) > points.rows) {
    fail_validation("k-means: k = " + std::to_string(k) + " exceeds n = " +
                    std::to_string(points.rows));
  }
  if (config.n_init < 1 || config.max_iter < 1) {
    fail_validation("k-means: n_init and max_iter must be >= 1");
  }

  Lloyd lloyd(points, k);
  Run best;
  bool have_best = false;
  for (int init = 0; init < config.n_init; ++init) {
    CounterRng rng(seed, static_cast<std::uint64_t>(init));
    auto run = lloyd.run(rng, config);
    if (!have_best || run.inertia < best.inertia) {
      best = std::move(run);
      have_best = true;
    }
  }

  Clustering out;
  out.k = k;
  out.seed = seed;
  out.dim = points.cols;
  out.assignments = std::move(best.assignments);
  out.centroids = std::move(best.centroids);
  out.inertia = best.inertia;
  out.iterations_run = best.iterations;
  out.inertia_history = std::move(best.history);
  return out;
}

// Rows are clustered in a canonical order (by vector, then id) so that the
// result does not depend on how the records happen to be ordered.
Clustering kmeans(const Dataset& dataset, int k, std::uint64_t seed,
                  const KMeansConfig& config) {
  const auto m = dataset.matrix();
  std::vector<std::size_t> order(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = m.row(a);
    const auto rb = m.row(b);
    if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end())) {
      return true;
    }
    if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end())) {
      return false;
    }
    return dataset.id(a) < dataset.id(b);
  });
  std::vector<float> sorted(m.data.size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto r = m.row(order[i]);
    std::copy(r.begin(), r.end(), sorted.begin() + i * m.cols);
  }
  auto out = kmeans(MatrixView{sorted, m.rows, m.cols}, k, seed, config);
  std::vector<std::uint32_t> assignments(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) assignments[order[i]] = out.assignments[i];
  out.assignments = std::move(assignments);
  return out;
}

ClusteringCache::ClusteringCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) fail_io("cannot create cache directory '" + directory_.string() + "'");
}

std::filesystem::path ClusteringCache::path_for(const std::string& dataset_digest,
                                                int k, std::uint64_t seed,
                                                const KMeansConfig& config) const {
  Fnv1a h;
  h.update(dataset_digest).update_u64(static_cast<std::uint64_t>(k));
  h.update_u64(seed).update(config.digest());
  return directory_ / ("kmeans-" + h.hex() + ".bin");
}

namespace {

constexpr char kCacheMagic[4] = {'L', 'S', 'K', 'M'};

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void put_vector(std::string& out, const std::vector<T>& values) {
  put<std::uint64_t>(out, values.size());
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  bool get(T& value) {
    if (pos_ + sizeof(T) > bytes_.size()) return false;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return true;
  }

  template <typename T>
  bool get_vector(std::vector<T>& values) {
    std::uint64_t n = 0;
    if (!get(n) || pos_ + n * sizeof(T) > bytes_.size()) return false;
    values.resize(n);
    std::memcpy(values.data(), bytes_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return true;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<Clustering> ClusteringCache::load(const std::string& dataset_digest,
                                                int k, std::uint64_t seed,
                                                const KMeansConfig& config) const {
  const auto path = path_for(dataset_digest, k, seed, config);
  if (!std::filesystem::exists(path)) return std::nullopt;
  const auto bytes = read_file(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCacheMagic, 4) != 0) {
    return std::nullopt;
  }
  const std::string body = bytes.substr(4);
  Reader r(body);
  Clustering c;
  std::uint64_t dim = 0;
  if (!r.get(c.k) || !r.get(c.seed) || !r.get(dim) || !r.get(c.inertia) ||
      !r.get(c.iterations_run) || !r.get_vector(c.assignments) ||
      !r.get_vector(c.centroids) || !r.get_vector(c.inertia_history) ||
      !r.at_end() || c.k != k || c.seed != seed) {
    return std::nullopt;
  }
  c.dim = dim;
  return c;
}

void ClusteringCache::store(const std::string& dataset_digest,
                            const KMeansConfig& config,
                            const Clustering& c) const {
  std::string bytes(kCacheMagic, 4);
  put(bytes, c.k);
  put(bytes, c.seed);
  put<std::uint64_t>(bytes, c.dim);
  put(bytes, c.inertia);
  put(bytes, c.iterations_run);
  put_vector(bytes, c.assignments);
  put_vector(bytes, c.centroids);
  put_vector(bytes, c.inertia_history);
  write_file_atomic(path_for(dataset_digest, c.k, c.seed, config), bytes);
}

std::vector<Clustering> kmeans_sweep_seed(const Dataset& dataset,
                                          const KMeansConfig& config,
                                          std::uint64_t seed, unsigned jobs,
                                          const ClusteringCache* cache) {
  config.validate();
  const auto count = static_cast<std::size_t>(config.k_max - config.k_min + 1);
  std::vector<Clustering> out(count);
  const std::string digest = cache ? dataset.digest() : std::string();
  parallel_for(count, jobs, [&](std::size_t i) {
    const int k = config.k_min + static_cast<int>(i);
    if (cache) {
      if (auto hit = cache->load(digest, k, seed, config)) {
        out[i] = std::move(*hit);
        return;
      }
    }
    out[i] = kmeans(dataset, k, seed, config);
    if (cache) cache->store(digest, config, out[i]);
  });
  return out;
}

std::vector<Clustering> kmeans_sweep(const Dataset& dataset,
                                     const KMeansConfig& config, unsigned jobs,
                                     const ClusteringCache* cache) {
  config.validate();
  std::vector<Clustering> out;
  for (const auto seed : config.seeds) {
    auto part = kmeans_sweep_seed(dataset, config, seed, jobs, cache);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace latentsplit
