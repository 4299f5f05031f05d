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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latentsplit/dataset.hpp"

namespace latentsplit {

enum class SplitMethod { kSubsetSum, kClosest, kRandom, kHoldout };

std::string_view to_string(SplitMethod method);
SplitMethod parse_split_method(std::string_view name);

/// A train/test partition by example id plus the provenance needed to
/// re-derive it. Ids are kept in dataset order.
struct SplitResult {
  SplitMethod method = SplitMethod::kRandom;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::optional<int> k_chosen;
  std::optional<std::uint64_t> cluster_seed;
  std::uint64_t split_seed = 0;
  /// Per-class shortfall (label -> count) before completion.
  std::map<std::string, std::int64_t> deficit;
  std::int64_t individual_topups = 0;
  std::string config_digest;

  bool operator==(const SplitResult&) const = default;
};

/// Row indices of a split resolved against a concrete dataset.
struct AppliedSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Resolves a split's ids against `dataset`. Membership depends only on
/// ids, never on row order. Throws Error(kValidation) listing ids of the
/// split missing from the dataset, ids of the dataset absent from the split,
/// or ids present on both sides.
AppliedSplit apply_split(const Dataset& dataset, const SplitResult& split);

/// Builds a SplitResult from row indices: rows flagged in `in_test` become
/// test ids, all others train ids.
SplitResult make_split(const Dataset& dataset, const std::vector<bool>& in_test,
                       SplitMethod method);

/// Per-class test counts (by label index) of an applied split.
std::vector<std::size_t> test_class_counts(const Dataset& dataset,
                                           const AppliedSplit& split);

}  // namespace latentsplit
