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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latentsplit/closest_split.hpp"
#include "latentsplit/diagnostics.hpp"
#include "latentsplit/io.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/probe.hpp"
#include "latentsplit/split.hpp"

namespace latentsplit {

struct LexiconPaths {
  std::optional<std::filesystem::path> stopwords;
  std::optional<std::filesystem::path> frequencies;
  std::optional<std::filesystem::path> common_words;
  std::optional<std::filesystem::path> keywords;

  bool any() const { return stopwords || frequencies || common_words || keywords; }
  Lexicons load() const;
};

struct PipelineConfig {
  std::filesystem::path input;
  std::optional<DatasetFormat> format;
  std::filesystem::path output;

  double ratio = 0.1;
  double holdout_ratio = 0.1;
  std::uint64_t holdout_seed = 0;
  KMeansConfig kmeans;
  std::vector<std::uint64_t> split_seeds{0, 1, 2};
  std::vector<SplitMethod> methods{SplitMethod::kSubsetSum, SplitMethod::kClosest,
                                   SplitMethod::kRandom};
  FarthestRule farthest = FarthestRule::kMeanDistance;
  QuotaMode quota = QuotaMode::kPerClass;
  KlDirection kl_direction = KlDirection::kTrainToTest;
  LexiconPaths lexicons;
  bool diagnostics = true;
  bool probe = true;
  ProbeConfig probe_config;
  unsigned jobs = 1;
  std::optional<std::filesystem::path> cache_dir;

  /// Checks ranges, seed lists and that referenced files exist.
  void validate() const;

  /// Canonical JSON (the "config" object of a manifest). Paths are stored as
  /// given.
  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);

  /// Digest of every setting that influences emitted splits (excludes
  /// output location, job count and cache directory).
  std::string digest() const;
};

struct SplitArtifact {
  std::string name;  // e.g. "closest_seed42"
  SplitResult split;
  /// Index of the cluster seed (or split seed, for random splits).
  std::size_t seed_position = 0;
  std::optional<DiagnosticsReport> diagnostics;
  std::optional<SplitComparison> comparison;
};

struct PipelineSummary {
  std::filesystem::path manifest;
  std::vector<SplitArtifact> splits;
  std::vector<std::string> warnings;
  /// Tab-separated drop summary (also written to probe/summary.tsv).
  std::string drop_table;
};

/// holdout -> cluster sweep -> splits -> diagnostics -> probe comparison.
/// Writes everything under config.output plus manifest.json. A failing stage
/// still writes the manifest (marked incomplete) and rethrows with the stage
/// name prefixed.
PipelineSummary run_pipeline(const PipelineConfig& config);

/// Reads the "config" object of a manifest written by run_pipeline.
PipelineConfig config_from_manifest(const std::filesystem::path& manifest);

}  // namespace latentsplit
