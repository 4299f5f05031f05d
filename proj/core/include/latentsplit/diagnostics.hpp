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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "latentsplit/dataset.hpp"
#include "latentsplit/split.hpp"

namespace latentsplit {

/// Lowercases ASCII and splits on runs of characters that are neither ASCII
/// alphanumerics nor UTF-8 bytes (>= 0x80). Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Number of UTF-8 code points.
std::size_t char_length(std::string_view text);

/// User-supplied word lists. None are bundled.
struct Lexicons {
  std::unordered_set<std::string> stopwords;
  /// word -> occurrences per million words
  std::unordered_map<std::string, double> word_frequencies;
  std::unordered_set<std::string> common_words;
  /// category -> phrases, in file order
  std::vector<std::pair<std::string, std::vector<std::string>>> keyword_categories;
};

/// One token per line; blank lines and lines starting with '#' skipped.
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);
/// "word<TAB>per_million" lines.
std::unordered_map<std::string, double> load_word_frequencies(
    const std::filesystem::path& path);
/// Unindented category name lines, each followed by indented phrase lines.
std::vector<std::pair<std::string, std::vector<std::string>>> load_keyword_categories(
    const std::filesystem::path& path);

/// Categories whose phrases occur in `text` (token-sequence match), in
/// category order.
std::vector<std::string> match_keyword_categories(
    std::string_view text,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& categories);

struct OverlapOptions {
  /// 0 = exact over every test example; otherwise a uniform sample of this
  /// many test examples.
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct OverlapResult {
  double value = 0.0;
  /// Test examples with no tokens left after stopword removal (scored 0).
  std::size_t empty_test_examples = 0;
};

/// Mean over test examples of the best cosine similarity between unigram
/// count vectors (stopwords removed) against any train example.
OverlapResult unigram_overlap(std::span<const std::string> train_texts,
                              std::span<const std::string> test_texts,
                              const std::unordered_set<std::string>& stopwords,
                              const OverlapOptions& options = {});

double avg_test_char_length(std::span<const std::string> test_texts);

/// Token occurrences in the test texts whose word is listed as common and
/// occurs at most `max_per_million` times per million (unlisted words count
/// as frequency 0).
std::int64_t rare_word_count(std::span<const std::string> test_texts,
                             const Lexicons& lexicons, double max_per_million = 1.0);

/// Categories tagging at least `min_presence` of all records whose share of
/// occurrences on the train side is below `min_share`. `tags[i]` belongs to
/// the record with train flag `in_train[i]`.
std::int64_t underrepresented_categories(
    std::span<const std::optional<std::vector<std::string>>> tags,
    const std::vector<bool>& in_train, double min_share = 0.5,
    double min_presence = 0.03);

enum class KlDirection { kTrainToTest, kTestToTrain };

std::string_view to_string(KlDirection direction);
KlDirection parse_kl_direction(std::string_view name);

/// Class-frequency-weighted KL divergence between add-one-smoothed per-class
/// source distributions of the two sides, mapped through 1 - exp(-x).
double source_kl_scaled(std::span<const std::string> sources,
                        std::span<const std::size_t> labels, std::size_t num_classes,
                        const std::vector<bool>& in_train,
                        KlDirection direction = KlDirection::kTrainToTest);

struct TermScore {
  std::string term;
  double score = 0.0;

  bool operator==(const TermScore&) const = default;
};

/// Class-based TF-IDF: score(t, c) = tf(t, c) * log(1 + A / f(t)), with A the
/// mean token count per class. Returns the `top_n` terms of each class,
/// ranked by score then term.
std::vector<std::vector<TermScore>> ctfidf_topics(
    const std::vector<std::vector<std::string>>& texts_by_class, std::size_t top_n,
    const std::unordered_set<std::string>& stopwords = {});

struct TopicList {
  std::string set;  // "train" or "test"
  std::string label;
  std::vector<TermScore> terms;
};

struct DiagnosticsReport {
  std::optional<double> unigram_overlap;
  std::optional<double> avg_test_char_length;
  std::optional<std::int64_t> rare_word_count;
  std::optional<std::int64_t> underrep_keywords;
  std::optional<std::int64_t> underrep_targets;
  std::optional<double> source_kl_scaled;
  std::vector<TopicList> topics;
  /// feature -> reason it could not be computed
  std::map<std::string, std::string> unavailable;
  std::vector<std::string> warnings;
};

struct DiagnosticsOptions {
  double min_share = 0.5;
  double min_presence = 0.03;
  KlDirection kl_direction = KlDirection::kTrainToTest;
  std::size_t top_n = 4;
  OverlapOptions overlap;
};

/// Computes every feature whose inputs are present; the rest are listed in
/// `unavailable` with the reason.
DiagnosticsReport compute_diagnostics(const Dataset& dataset, const AppliedSplit& split,
                                      const Lexicons* lexicons,
                                      const DiagnosticsOptions& options = {});

std::string diagnostics_to_json(const DiagnosticsReport& report);

}  // namespace latentsplit
