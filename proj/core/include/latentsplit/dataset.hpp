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
#include <unordered_map>
#include <vector>

namespace latentsplit {

/// One labelled example as it appears in interchange files.
struct EmbeddingRecord {
  std::string id;
  std::vector<float> vector;
  std::string label;
  std::optional<std::string> text;
  std::optional<std::string> source;
  std::optional<std::vector<std::string>> keywords;
  std::optional<std::vector<std::string>> targets;

  bool operator==(const EmbeddingRecord&) const = default;
};

/// Read-only row-major view over an n x d float matrix.
struct MatrixView {
  std::span<const float> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const float> row(std::size_t i) const {
    return data.subspan(i * cols, cols);
  }
};

/// Validated, immutable collection of records. Vectors are stored
/// contiguously; labels are mapped to dense indices in first-appearance
/// order (or in the order of a pre-declared vocabulary).
class Dataset {
 public:
  Dataset() = default;

  /// Validates and builds a dataset. Throws Error(kValidation) naming the
  /// offending record id on a dimension mismatch, duplicate id, non-finite
  /// entry, or (when `vocabulary` is given) an unknown label.
  static Dataset from_records(
      std::vector<EmbeddingRecord> records, std::size_t dim,
      std::optional<std::vector<std::string>> vocabulary = std::nullopt);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dim() const { return dim_; }
  std::size_t num_classes() const { return labels_.size(); }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::size_t>& class_counts() const { return class_counts_; }
  std::optional<std::size_t> label_index(const std::string& label) const;

  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t label(std::size_t i) const { return label_of_[i]; }
  const std::vector<std::size_t>& label_indices() const { return label_of_; }
  std::span<const float> vector(std::size_t i) const {
    return {matrix_.data() + i * dim_, dim_};
  }
  MatrixView matrix() const { return {matrix_, size(), dim_}; }

  const std::optional<std::string>& text(std::size_t i) const { return text_[i]; }
  const std::optional<std::string>& source(std::size_t i) const {
    return source_[i];
  }
  const std::optional<std::vector<std::string>>& keywords(std::size_t i) const {
    return keywords_[i];
  }
  const std::optional<std::vector<std::string>>& targets(std::size_t i) const {
    return targets_[i];
  }

  std::optional<std::size_t> find(const std::string& id) const;

  EmbeddingRecord record(std::size_t i) const;
  std::vector<EmbeddingRecord> records() const;

  /// Rows `indices` in the given order, keeping this dataset's label
  /// vocabulary so class indices stay aligned.
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Digest over ids, labels and vector bytes.
  std::string digest() const;

  bool operator==(const Dataset& other) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> labels_;
  std::vector<std::size_t> class_counts_;
  std::vector<std::string> ids_;
  std::vector<std::size_t> label_of_;
  std::vector<float> matrix_;
  std::vector<std::optional<std::string>> text_;
  std::vector<std::optional<std::string>> source_;
  std::vector<std::optional<std::vector<std::string>>> keywords_;
  std::vector<std::optional<std::vector<std::string>>> targets_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace latentsplit
