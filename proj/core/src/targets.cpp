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

#include "latentsplit/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentsplit/error.hpp"
#include "latentsplit/random.hpp"

namespace latentsplit {

__extension__ typedef unsigned __int128 uint128;

void SplitTarget::validate(std::span<const std::size_t> class_counts) const {
  if (per_class.size() != class_counts.size()) {
    fail_validation("split target has " + std::to_string(per_class.size()) +
                    " classes, dataset has " + std::to_string(class_counts.size()));
  }
  std::size_t sum = 0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] > class_counts[c]) {
      fail_infeasible("split target for class #" + std::to_string(c) + " (" +
                      std::to_string(per_class[c]) + ") exceeds its " +
                      std::to_string(class_counts[c]) + " examples");
    }
    sum += per_class[c];
  }
  if (sum != total) fail_validation("split target per-class counts do not sum to total");
}

SplitTarget compute_target(std::span<const std::size_t> class_counts,
                           double ratio, std::span<const std::string> labels) {
  auto name = [&](std::size_t c) {
    return c < labels.size() ? "'" + labels[c] + "'" : "#" + std::to_string(c);
  };
  if (!(ratio > 0.0 && ratio < 1.0)) {
    fail_validation("test ratio must lie in (0, 1)");
  }
  const std::size_t n =
      std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (n == 0) fail_validation("cannot compute a split target for an empty dataset");
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    if (class_counts[c] == 0) {
      fail_validation("class " + name(c) + " has no examples");
    }
  }

  SplitTarget target;
  target.total = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  const auto m = class_counts.size();
  target.per_class.assign(m, 0);

  // Exact integer quotas: total * count_c = floor * n + remainder.
  std::vector<uint128> remainder(m);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < m; ++c) {
    const auto scaled = static_cast<uint128>(target.total) * class_counts[c];
    target.per_class[c] = static_cast<std::size_t>(scaled / n);
    remainder[c] = scaled % n;
    assigned += target.per_class[c];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return class_counts[a] > class_counts[b];
  });
  for (std::size_t i = 0; assigned < target.total; ++i, ++assigned) {
    ++target.per_class[order[i]];
  }

  for (std::size_t c = 0; c < m; ++c) {
    if (target.per_class[c] == 0) {
      target.warnings.push_back("class " + name(c) +
                                " receives no test examples at this ratio");
    }
  }
  return target;
}

SplitTarget compute_target(const Dataset& dataset, double ratio) {
  return compute_target(dataset.class_counts(), ratio, dataset.labels());
}

namespace {

std::vector<bool> draw_test_rows(const Dataset& dataset,
                                 const SplitTarget& target, std::uint64_t seed) {
  target.validate(dataset.class_counts());
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[dataset.label(i)].push_back(i);
  }
  std::vector<bool> in_test(dataset.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    CounterRng rng(seed, c);
    for (const auto row :
         sample_without_replacement(by_class[c], target.per_class[c], rng)) {
      in_test[row] = true;
    }
  }
  return in_test;
}

}  // namespace

SplitResult stratified_random_split(const Dataset& dataset,
                                    const SplitTarget& target,
                                    std::uint64_t seed) {
  auto split = make_split(dataset, draw_test_rows(dataset, target, seed),
                          SplitMethod::kRandom);
  split.split_seed = seed;
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    split.deficit[dataset.labels()[c]] = 0;
  }
  return split;
}

Holdout independent_holdout(const Dataset& dataset, double ratio,
                            std::uint64_t seed) {
  Holdout out;
  std::vector<bool> in_holdout(dataset.size(), false);
  if (ratio == 0.0) {
    out.warnings.push_back("holdout ratio is 0; no independent test data reserved");
  } else {
    auto target = compute_target(dataset, ratio);
    out.warnings = target.warnings;
    in_holdout = draw_test_rows(dataset, target, seed);
  }
  std::vector<std::size_t> working_rows;
  std::vector<std::size_t> holdout_rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (in_holdout[i] ? holdout_rows : working_rows).push_back(i);
  }
  out.working = dataset.subset(working_rows);
  out.holdout = dataset.subset(holdout_rows);
  out.split = make_split(dataset, in_holdout, SplitMethod::kHoldout);
  out.split.split_seed = seed;
  return out;
}

}  // namespace latentsplit
