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

#include "latentsplit/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "latentsplit/error.hpp"

namespace latentsplit {

using nlohmann::json;

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr char kMagic[4] = {'L', 'S', 'P', 'L'};

json record_to_json(const Dataset& ds, std::size_t i, bool with_vector) {
  json obj;
  obj["id"] = ds.id(i);
  if (with_vector) {
    json vec = json::array();
    for (const float v : ds.vector(i)) vec.push_back(static_cast<double>(v));
    obj["vector"] = std::move(vec);
  }
  obj["label"] = ds.labels()[ds.label(i)];
  if (ds.text(i)) obj["text"] = *ds.text(i);
  if (ds.source(i)) obj["source"] = *ds.source(i);
  if (ds.keywords(i)) obj["keywords"] = *ds.keywords(i);
  if (ds.targets(i)) obj["targets"] = *ds.targets(i);
  return obj;
}

std::string header_line(const Dataset& ds, std::string_view format) {
  json header;
  header["format"] = format;
  header["version"] = kFormatVersion;
  header["n"] = ds.size();
  header["d"] = ds.dim();
  header["labels"] = ds.labels();
  return header.dump();
}

struct Header {
  std::size_t n = 0;
  std::size_t d = 0;
  std::optional<std::vector<std::string>> labels;
};

Header parse_header(const std::string& line, std::string_view expected_format,
                    const std::filesystem::path& path) {
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    fail_validation(path.string() + ": malformed header: " + e.what());
  }
  if (!header.is_object() || header.value("format", "") != expected_format) {
    fail_validation(path.string() + ": missing or wrong format header (expected '" +
                    std::string(expected_format) + "')");
  }
  if (header.value("version", 0u) != kFormatVersion) {
    fail_validation(path.string() + ": unsupported format version");
  }
  Header h;
  try {
    h.n = header.at("n").get<std::size_t>();
    h.d = header.at("d").get<std::size_t>();
    if (header.contains("labels") && !header["labels"].empty()) {
      h.labels = header["labels"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    fail_validation(path.string() + ": malformed header: " + e.what());
  }
  return h;
}

std::optional<std::vector<std::string>> optional_tags(const json& obj,
                                                      const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return obj[key].get<std::vector<std::string>>();
}

EmbeddingRecord parse_record(const std::string& line, std::size_t line_no,
                             const std::filesystem::path& path, bool with_vector) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception& e) {
    fail_validation(path.string() + ":" + std::to_string(line_no) +
                    ": malformed record: " + e.what());
  }
  EmbeddingRecord rec;
  try {
    rec.id = obj.at("id").get<std::string>();
  } catch (const json::exception&) {
    fail_validation(path.string() + ":" + std::to_string(line_no) +
                    ": record without a string id");
  }
  try {
    rec.label = obj.at("label").get<std::string>();
    if (with_vector) {
      const auto& vec = obj.at("vector");
      if (!vec.is_array()) throw std::runtime_error("vector is not an array");
      rec.vector.reserve(vec.size());
      for (const auto& x : vec) {
        // JSON cannot carry NaN; writers emit null for it.
        if (!x.is_number()) {
          fail_validation("record '" + rec.id + "': non-finite vector entry");
        }
        rec.vector.push_back(static_cast<float>(x.get<double>()));
      }
    }
    if (obj.contains("text") && !obj["text"].is_null()) {
      rec.text = obj["text"].get<std::string>();
    }
    if (obj.contains("source") && !obj["source"].is_null()) {
      rec.source = obj["source"].get<std::string>();
    }
    rec.keywords = optional_tags(obj, "keywords");
    rec.targets = optional_tags(obj, "targets");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail_validation("record '" + rec.id + "': " + e.what());
  }
  return rec;
}

std::ifstream open_for_read(const std::filesystem::path& path,
                            std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) fail_io("cannot open '" + path.string() + "' for reading");
  return in;
}

std::vector<EmbeddingRecord> read_record_lines(std::istream& in,
                                               const std::filesystem::path& path,
                                               const Header& header,
                                               bool with_vector) {
  std::vector<EmbeddingRecord> records;
  records.reserve(header.n);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(parse_record(line, line_no, path, with_vector));
  }
  if (records.size() != header.n) {
    fail_validation(path.string() + ": header declares " +
                    std::to_string(header.n) + " records but file has " +
                    std::to_string(records.size()));
  }
  return records;
}

Dataset load_jsonl(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) fail_validation(path.string() + ": empty file");
  const auto header = parse_header(line, "latentsplit", path);
  auto records = read_record_lines(in, path, header, true);
  return Dataset::from_records(std::move(records), header.d, header.labels);
}

template <typename T>
T read_le(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(p[i]) << (8 * i);
  }
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

Dataset load_binary(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 4;
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail_validation(path.string() + ": not an LSPL binary file");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (read_le<std::uint32_t>(p + 4) != kFormatVersion) {
    fail_validation(path.string() + ": unsupported binary format version");
  }
  const auto n = read_le<std::uint64_t>(p + 8);
  const auto d = read_le<std::uint32_t>(p + 16);
  if (bytes.size() != kHeaderSize + n * d * 4) {
    fail_validation(path.string() + ": payload size does not match n*d floats");
  }

  const auto sidecar = binary_sidecar_path(path);
  auto in = open_for_read(sidecar);
  std::string line;
  if (!std::getline(in, line)) fail_validation(sidecar.string() + ": empty file");
  const auto header = parse_header(line, "latentsplit-meta", sidecar);
  if (header.n != n || header.d != d) {
    fail_validation(sidecar.string() + ": sidecar header disagrees with binary header");
  }
  auto records = read_record_lines(in, sidecar, header, false);

  const unsigned char* payload = p + kHeaderSize;
  for (std::size_t i = 0; i < n; ++i) {
    auto& vec = records[i].vector;
    vec.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      vec[j] = std::bit_cast<float>(read_le<std::uint32_t>(payload + 4 * (i * d + j)));
    }
  }
  return Dataset::from_records(std::move(records), d, header.labels);
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "binary") return DatasetFormat::kBinary;
  fail_validation("unknown dataset format '" + std::string(name) + "'");
}

DatasetFormat guess_dataset_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".lspl") ? DatasetFormat::kBinary
                                           : DatasetFormat::kJsonl;
}

std::filesystem::path binary_sidecar_path(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar += ".meta.jsonl";
  return sidecar;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  return format == DatasetFormat::kJsonl ? load_jsonl(path) : load_binary(path);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path,
                   DatasetFormat format) {
  const bool binary = format == DatasetFormat::kBinary;
  std::string text =
      header_line(dataset, binary ? "latentsplit-meta" : "latentsplit") + "\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    text += record_to_json(dataset, i, !binary)
                .dump(-1, ' ', false, json::error_handler_t::replace);
    text += '\n';
  }
  if (!binary) {
    write_file_atomic(path, text);
    return;
  }

  std::string bytes(kMagic, 4);
  append_le<std::uint32_t>(bytes, kFormatVersion);
  append_le<std::uint64_t>(bytes, dataset.size());
  append_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(dataset.dim()));
  bytes.reserve(bytes.size() + dataset.size() * dataset.dim() * 4);
  for (const float v : dataset.matrix().data) {
    append_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(v));
  }
  write_file_atomic(binary_sidecar_path(path), text);
  write_file_atomic(path, bytes);
}

std::string split_to_json(const SplitResult& split) {
  json obj;
  obj["method"] = to_string(split.method);
  obj["k_chosen"] = split.k_chosen ? json(*split.k_chosen) : json(nullptr);
  obj["cluster_seed"] =
      split.cluster_seed ? json(*split.cluster_seed) : json(nullptr);
  obj["split_seed"] = split.split_seed;
  obj["train_ids"] = split.train_ids;
  obj["test_ids"] = split.test_ids;
  obj["deficit"] = split.deficit;
  obj["individual_topups"] = split.individual_topups;
  obj["config_digest"] = split.config_digest;
  return obj.dump(1) + "\n";
}

SplitResult split_from_json(std::string_view text) {
  SplitResult split;
  try {
    const auto obj = json::parse(text);
    split.method = parse_split_method(obj.at("method").get<std::string>());
    if (!obj.at("k_chosen").is_null()) split.k_chosen = obj["k_chosen"].get<int>();
    if (!obj.at("cluster_seed").is_null()) {
      split.cluster_seed = obj["cluster_seed"].get<std::uint64_t>();
    }
    split.split_seed = obj.at("split_seed").get<std::uint64_t>();
    split.train_ids = obj.at("train_ids").get<std::vector<std::string>>();
    split.test_ids = obj.at("test_ids").get<std::vector<std::string>>();
    split.deficit = obj.at("deficit").get<std::map<std::string, std::int64_t>>();
    split.individual_topups = obj.at("individual_topups").get<std::int64_t>();
    split.config_digest = obj.at("config_digest").get<std::string>();
  } catch (const json::exception& e) {
    fail_validation(std::string("malformed split file: ") + e.what());
  }
  return split;
}

void export_split(const SplitResult& split, const std::filesystem::path& path) {
  write_file_atomic(path, split_to_json(split));
}

SplitResult import_split(const std::filesystem::path& path) {
  return split_from_json(read_file(path));
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail_io("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail_io("cannot rename into '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_for_read(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace latentsplit
