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

#include "latentsplit/dataset.hpp"

#include <cmath>
#include <cstring>

#include "latentsplit/digest.hpp"
#include "latentsplit/error.hpp"

namespace latentsplit {

Dataset Dataset::from_records(
    std::vector<EmbeddingRecord> records, std::size_t dim,
    std::optional<std::vector<std::string>> vocabulary) {
  if (dim == 0) fail_validation("dataset dimension must be positive");

  Dataset ds;
  ds.dim_ = dim;
  std::unordered_map<std::string, std::size_t> label_lookup;
  if (vocabulary) {
    for (const auto& label : *vocabulary) {
      if (!label_lookup.emplace(label, ds.labels_.size()).second) {
        fail_validation("duplicate label '" + label + "' in vocabulary");
      }
      ds.labels_.push_back(label);
    }
  }

  const auto n = records.size();
  ds.ids_.reserve(n);
  ds.label_of_.reserve(n);
  ds.matrix_.reserve(n * dim);
  ds.text_.reserve(n);
  ds.source_.reserve(n);
  ds.keywords_.reserve(n);
  ds.targets_.reserve(n);
  ds.index_.reserve(n);

  for (auto& rec : records) {
    if (rec.vector.size() != dim) {
      fail_validation("record '" + rec.id + "': vector length " +
                      std::to_string(rec.vector.size()) +
                      " does not match dimension " + std::to_string(dim));
    }
    for (const float v : rec.vector) {
      if (!std::isfinite(v)) {
        fail_validation("record '" + rec.id + "': non-finite vector entry");
      }
    }
    if (!ds.index_.emplace(rec.id, ds.ids_.size()).second) {
      fail_validation("duplicate id '" + rec.id + "'");
    }
    auto it = label_lookup.find(rec.label);
    if (it == label_lookup.end()) {
      if (vocabulary) {
        fail_validation("record '" + rec.id + "': unknown label '" +
                        rec.label + "'");
      }
      it = label_lookup.emplace(rec.label, ds.labels_.size()).first;
      ds.labels_.push_back(rec.label);
    }
    ds.ids_.push_back(std::move(rec.id));
    ds.label_of_.push_back(it->second);
    ds.matrix_.insert(ds.matrix_.end(), rec.vector.begin(), rec.vector.end());
    ds.text_.push_back(std::move(rec.text));
    ds.source_.push_back(std::move(rec.source));
    ds.keywords_.push_back(std::move(rec.keywords));
    ds.targets_.push_back(std::move(rec.targets));
  }

  ds.class_counts_.assign(ds.labels_.size(), 0);
  for (const auto c : ds.label_of_) ++ds.class_counts_[c];
  return ds;
}

std::optional<std::size_t> Dataset::label_index(const std::string& label) const {
  for (std::size_t c = 0; c < labels_.size(); ++c) {
    if (labels_[c] == label) return c;
  }
  return std::nullopt;
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingRecord Dataset::record(std::size_t i) const {
  const auto v = vector(i);
  return EmbeddingRecord{ids_[i],      {v.begin(), v.end()}, labels_[label_of_[i]],
                         text_[i],     source_[i],           keywords_[i],
                         targets_[i]};
}

std::vector<EmbeddingRecord> Dataset::records() const {
  std::vector<EmbeddingRecord> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<EmbeddingRecord> picked;
  picked.reserve(indices.size());
  for (const auto i : indices) picked.push_back(record(i));
  return from_records(std::move(picked), dim_, labels_);
}

std::string Dataset::digest() const {
  Fnv1a h;
  h.update_u64(size()).update_u64(dim_);
  for (const auto& label : labels_) h.update(label);
  for (std::size_t i = 0; i < size(); ++i) {
    h.update(ids_[i]).update_u64(label_of_[i]);
  }
  h.update(std::as_bytes(std::span(matrix_)));
  return h.hex();
}

bool Dataset::operator==(const Dataset& other) const {
  if (dim_ != other.dim_ || labels_ != other.labels_ || ids_ != other.ids_ ||
      label_of_ != other.label_of_ || text_ != other.text_ ||
      source_ != other.source_ || keywords_ != other.keywords_ ||
      targets_ != other.targets_ || matrix_.size() != other.matrix_.size()) {
    return false;
  }
  // Bitwise: distinguishes -0.0 from 0.0.
  return matrix_.empty() ||
         std::memcmp(matrix_.data(), other.matrix_.data(),
                     matrix_.size() * sizeof(float)) == 0;
}

}  // namespace latentsplit
