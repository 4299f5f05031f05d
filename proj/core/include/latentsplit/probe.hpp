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
#include <vector>

#include "latentsplit/dataset.hpp"
#include "latentsplit/split.hpp"

namespace latentsplit {

struct ProbeConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-3;
  /// Recorded with the model. Zero initialisation and full-batch updates
  /// leave training independent of it.
  std::uint64_t seed = 0;
  bool unit_norm = false;
};

/// Multinomial logistic regression over embedding vectors.
struct ProbeModel {
  std::size_t classes = 0;
  std::size_t dim = 0;
  /// classes x dim, row-major.
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<std::string> labels;
  ProbeConfig config;
  /// Objective before each update and after the last one (epochs + 1).
  std::vector<double> loss_history;

  std::vector<double> logits(std::span<const float> x) const;
  std::size_t predict(std::span<const float> x) const;
};

/// Mean cross-entropy plus (l2 / 2) * ||W||^2 (bias unregularised).
/// `params` holds W (row-major) followed by the bias.
class ProbeObjective {
 public:
  ProbeObjective(const Dataset& dataset, std::span<const std::size_t> rows,
                 double l2, bool unit_norm);

  std::size_t num_params() const { return classes_ * (dim_ + 1); }
  double value(std::span<const double> params) const;
  double value_and_gradient(std::span<const double> params,
                            std::span<double> gradient) const;

 private:
  std::size_t classes_, dim_;
  double l2_;
  std::vector<double> x_;
  std::vector<std::size_t> y_;
};

/// Full-batch gradient descent from zero parameters. Throws
/// Error(kValidation) when fewer than two classes are present in `rows`.
ProbeModel train_probe(const Dataset& dataset, std::span<const std::size_t> rows,
                       const ProbeConfig& config = {});

struct ScoreReport {
  double accuracy = 0.0;
  std::vector<double> per_class_f1;
  double macro_f1 = 0.0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::int64_t>> confusion;
  std::vector<std::string> labels;
};

/// Scores from a confusion matrix; F1 is 0 when precision + recall is 0.
ScoreReport score_confusion(std::vector<std::vector<std::int64_t>> confusion,
                            std::vector<std::string> labels);

ScoreReport score(const ProbeModel& model, const Dataset& dataset,
                  std::span<const std::size_t> rows);

struct SplitComparison {
  ScoreReport candidate;
  ScoreReport baseline;
  std::optional<ScoreReport> candidate_on_holdout;
  std::optional<ScoreReport> baseline_on_holdout;
  /// baseline.macro_f1 - candidate.macro_f1 on each split's own test side.
  double macro_f1_drop = 0.0;
};

/// Trains one probe per split on its train side and scores it on its own
/// test side and, when given, on `holdout`.
SplitComparison compare_splits(const Dataset& dataset, const SplitResult& candidate,
                               const SplitResult& baseline, const ProbeConfig& config,
                               const Dataset* holdout = nullptr);

std::string score_to_json(const ScoreReport& report);
std::string comparison_to_json(const SplitComparison& comparison);

}  // namespace latentsplit
