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

#include <filesystem>
#include <string>
#include <string_view>

#include "latentsplit/dataset.hpp"
#include "latentsplit/split.hpp"

namespace latentsplit {

enum class DatasetFormat { kJsonl, kBinary };

DatasetFormat parse_dataset_format(std::string_view name);

/// Infers the format from the extension: ".bin"/".lspl" is binary, anything
/// else JSON lines.
DatasetFormat guess_dataset_format(const std::filesystem::path& path);

/// Text format: a header line {"format":"latentsplit","version":1,"n":..,
/// "d":..,"labels":[..]} followed by one record object per line.
///
/// Binary format: "LSPL" magic, u32 version, u64 n, u32 d (little-endian),
/// then n*d little-endian IEEE-754 floats row-major. Ids, labels and metadata
/// live in the sidecar `<path>.meta.jsonl` (same layout as the text format
/// with the "vector" field omitted).
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path,
                   DatasetFormat format);

std::filesystem::path binary_sidecar_path(const std::filesystem::path& path);

void export_split(const SplitResult& split, const std::filesystem::path& path);
SplitResult import_split(const std::filesystem::path& path);

std::string split_to_json(const SplitResult& split);
SplitResult split_from_json(std::string_view text);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace latentsplit
