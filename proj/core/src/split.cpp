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

#include "latentsplit/split.hpp"

#include <unordered_set>

#include "latentsplit/error.hpp"

namespace latentsplit {

std::string_view to_string(SplitMethod method) {
  switch (method) {
    case SplitMethod::kSubsetSum: return "subset_sum";
    case SplitMethod::kClosest: return "closest";
    case SplitMethod::kRandom: return "random";
    case SplitMethod::kHoldout: return "holdout";
  }
  return "unknown";
}

SplitMethod parse_split_method(std::string_view name) {
  if (name == "subset_sum") return SplitMethod::kSubsetSum;
  if (name == "closest") return SplitMethod::kClosest;
  if (name == "random") return SplitMethod::kRandom;
  if (name == "holdout") return SplitMethod::kHoldout;
  fail_validation("unknown split method '" + std::string(name) + "'");
}

namespace {

std::string join_limited(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 20;
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > kShown) {
    out += ", ... (" + std::to_string(ids.size()) + " total)";
  }
  return out;
}

}  // namespace

AppliedSplit apply_split(const Dataset& dataset, const SplitResult& split) {
  std::vector<char> side(dataset.size(), 0);  // 0 unseen, 1 train, 2 test
  std::vector<std::string> missing;
  std::vector<std::string> duplicated;

  auto mark = [&](const std::vector<std::string>& ids, char tag) {
    for (const auto& id : ids) {
      const auto row = dataset.find(id);
      if (!row) {
        missing.push_back(id);
      } else if (side[*row] != 0) {
        duplicated.push_back(id);
      } else {
        side[*row] = tag;
      }
    }
  };
  mark(split.train_ids, 1);
  mark(split.test_ids, 2);

  if (!missing.empty()) {
    fail_validation("split references ids missing from the dataset: " +
                    join_limited(missing));
  }
  if (!duplicated.empty()) {
    fail_validation("split lists ids more than once: " + join_limited(duplicated));
  }

  AppliedSplit applied;
  std::vector<std::string> unassigned;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (side[i] == 1) {
      applied.train.push_back(i);
    } else if (side[i] == 2) {
      applied.test.push_back(i);
    } else {
      unassigned.push_back(dataset.id(i));
    }
  }
  if (!unassigned.empty()) {
    fail_validation("dataset ids not covered by the split: " +
                    join_limited(unassigned));
  }
  return applied;
}

SplitResult make_split(const Dataset& dataset, const std::vector<bool>& in_test,
                       SplitMethod method) {
  SplitResult split;
  split.method = method;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (in_test[i] ? split.test_ids : split.train_ids).push_back(dataset.id(i));
  }
  return split;
}

std::vector<std::size_t> test_class_counts(const Dataset& dataset,
                                           const AppliedSplit& split) {
  std::vector<std::size_t> counts(dataset.num_classes(), 0);
  for (const auto i : split.test) ++counts[dataset.label(i)];
  return counts;
}

}  // namespace latentsplit
