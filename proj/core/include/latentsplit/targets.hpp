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
#include <string>
#include <vector>

#include "latentsplit/dataset.hpp"
#include "latentsplit/split.hpp"

namespace latentsplit {

/// Required test-set size per class (indexed like Dataset::labels()).
struct SplitTarget {
  std::size_t total = 0;
  std::vector<std::size_t> per_class;
  std::vector<std::string> warnings;

  /// Throws Error(kValidation) unless the per-class counts sum to `total`
  /// and fit inside `class_counts`.
  void validate(std::span<const std::size_t> class_counts) const;
};

/// total = round(ratio * n), apportioned over classes by largest remainder.
/// Remainder ties go to the more frequent class, then the earlier label.
SplitTarget compute_target(std::span<const std::size_t> class_counts,
                           double ratio,
                           std::span<const std::string> labels = {});
SplitTarget compute_target(const Dataset& dataset, double ratio);

/// Uniform per-class sampling without replacement; deterministic in `seed`.
SplitResult stratified_random_split(const Dataset& dataset,
                                    const SplitTarget& target,
                                    std::uint64_t seed);

struct Holdout {
  Dataset working;
  Dataset holdout;
  /// method = holdout; test side is the reserved holdout.
  SplitResult split;
  std::vector<std::string> warnings;
};

/// Reserves a stratified random `ratio` share before any latent splitting.
/// ratio == 0 yields an empty holdout (with a warning).
Holdout independent_holdout(const Dataset& dataset, double ratio,
                            std::uint64_t seed);

}  // namespace latentsplit
