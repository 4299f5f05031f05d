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

#include "latentsplit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"
#include "latentsplit/error.hpp"
#include "latentsplit/parallel.hpp"
#include "latentsplit/random.hpp"

namespace latentsplit {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if ((u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || u >= 0x80) {
      current.push_back(ch);
    } else if (u >= 'A' && u <= 'Z') {
      current.push_back(static_cast<char>(u - 'A' + 'a'));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t char_length(std::string_view text) {
  std::size_t n = 0;
  for (const char ch : text) {
    if ((static_cast<unsigned char>(ch) & 0xc0) != 0x80) ++n;
  }
  return n;
}

namespace {

std::ifstream open_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open lexicon '" + path.string() + "'");
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
  auto in = open_lexicon(path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto word = trim(line);
    if (word.empty() || word.front() == '#') continue;
    for (auto& token : tokenize(word)) words.insert(std::move(token));
  }
  return words;
}

std::unordered_map<std::string, double> load_word_frequencies(
    const std::filesystem::path& path) {
  auto in = open_lexicon(path);
  std::unordered_map<std::string, double> freq;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail_validation(path.string() + ":" + std::to_string(line_no) +
                      ": expected word<TAB>per_million");
    }
    double value = 0.0;
    try {
      value = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      fail_validation(path.string() + ":" + std::to_string(line_no) + ": bad frequency");
    }
    if (!(value >= 0.0)) {
      fail_validation(path.string() + ":" + std::to_string(line_no) +
                      ": frequency must be non-negative");
    }
    auto tokens = tokenize(line.substr(0, tab));
    if (tokens.size() == 1) freq[tokens.front()] = value;
  }
  return freq;
}

std::vector<std::pair<std::string, std::vector<std::string>>> load_keyword_categories(
    const std::filesystem::path& path) {
  auto in = open_lexicon(path);
  std::vector<std::pair<std::string, std::vector<std::string>>> categories;
  std::string line;
  while (std::getline(in, line)) {
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    if (line.front() == ' ' || line.front() == '\t') {
      if (categories.empty()) {
        fail_validation(path.string() + ": phrase before any category header");
      }
      categories.back().second.emplace_back(content);
    } else {
      categories.emplace_back(std::string(content), std::vector<std::string>{});
    }
  }
  return categories;
}

std::vector<std::string> match_keyword_categories(
    std::string_view text,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& categories) {
  const auto tokens = tokenize(text);
  std::vector<std::string> matched;
  for (const auto& [name, phrases] : categories) {
    bool hit = false;
    for (const auto& phrase : phrases) {
      const auto needle = tokenize(phrase);
      if (needle.empty() || needle.size() > tokens.size()) continue;
      hit = std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end()) !=
            tokens.end();
      if (hit) break;
    }
    if (hit) matched.push_back(name);
  }
  return matched;
}

namespace {

/// Sparse unigram counts, term ids ascending.
struct CountVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
  double squared_norm = 0.0;
};

class Vocabulary {
 public:
  CountVector encode(std::string_view text,
                     const std::unordered_set<std::string>& stopwords) {
    std::map<std::uint32_t, double> counts;
    for (auto& token : tokenize(text)) {
      if (stopwords.contains(token)) continue;
      auto [it, inserted] =
          ids_.emplace(std::move(token), static_cast<std::uint32_t>(ids_.size()));
      counts[it->second] += 1.0;
    }
    CountVector v;
    v.entries.assign(counts.begin(), counts.end());
    for (const auto& [id, c] : v.entries) v.squared_norm += c * c;
    return v;
  }

  std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
};

}  // namespace

OverlapResult unigram_overlap(std::span<const std::string> train_texts,
                              std::span<const std::string> test_texts,
                              const std::unordered_set<std::string>& stopwords,
                              const OverlapOptions& options) {
  if (test_texts.empty()) fail_validation("unigram overlap: empty test set");

  Vocabulary vocab;
  std::vector<CountVector> train;
  train.reserve(train_texts.size());
  for (const auto& t : train_texts) train.push_back(vocab.encode(t, stopwords));

  std::vector<std::size_t> picked(test_texts.size());
  for (std::size_t i = 0; i < picked.size(); ++i) picked[i] = i;
  if (options.sample > 0 && options.sample < picked.size()) {
    CounterRng rng(options.seed, 0);
    picked = sample_without_replacement(std::move(picked), options.sample, rng);
    std::sort(picked.begin(), picked.end());
  }
  std::vector<CountVector> test;
  test.reserve(picked.size());
  for (const auto i : picked) test.push_back(vocab.encode(test_texts[i], stopwords));

  // term -> (train doc, count)
  std::vector<std::vector<std::pair<std::uint32_t, double>>> postings(vocab.size());
  for (std::size_t d = 0; d < train.size(); ++d) {
    for (const auto& [term, count] : train[d].entries) {
      postings[term].emplace_back(static_cast<std::uint32_t>(d), count);
    }
  }

  std::vector<double> best(test.size(), 0.0);
  const unsigned jobs = std::max(1u, options.jobs);
  const std::size_t chunks = std::min<std::size_t>(jobs, test.size());
  parallel_for(chunks, jobs, [&](std::size_t chunk) {
    std::vector<double> dots(train.size(), 0.0);
    std::vector<std::uint32_t> touched;
    for (std::size_t q = chunk; q < test.size(); q += chunks) {
      const auto& tv = test[q];
      if (tv.entries.empty()) continue;
      touched.clear();
      for (const auto& [term, count] : tv.entries) {
        for (const auto& [doc, c] : postings[term]) {
          if (dots[doc] == 0.0) touched.push_back(doc);
          dots[doc] += count * c;
        }
      }
      double top = 0.0;
      for (const auto doc : touched) {
        // Integer-valued dot and norms: identical vectors give exactly 1.
        const double sim = dots[doc] / std::sqrt(tv.squared_norm * train[doc].squared_norm);
        top = std::max(top, sim);
        dots[doc] = 0.0;
      }
      best[q] = std::min(top, 1.0);
    }
  });

  OverlapResult out;
  double sum = 0.0;
  for (std::size_t q = 0; q < test.size(); ++q) {
    sum += best[q];
    if (test[q].entries.empty()) ++out.empty_test_examples;
  }
  out.value = sum / static_cast<double>(test.size());
  return out;
}

double avg_test_char_length(std::span<const std::string> test_texts) {
  if (test_texts.empty()) fail_validation("average length: empty test set");
  double total = 0.0;
  for (const auto& t : test_texts) total += static_cast<double>(char_length(t));
  return total / static_cast<double>(test_texts.size());
}

std::int64_t rare_word_count(std::span<const std::string> test_texts,
                             const Lexicons& lexicons, double max_per_million) {
  if (lexicons.common_words.empty() || lexicons.word_frequencies.empty()) {
    fail_validation("rare word count needs word-frequency and common-word lexicons");
  }
  std::int64_t count = 0;
  for (const auto& text : test_texts) {
    for (const auto& token : tokenize(text)) {
      if (!lexicons.common_words.contains(token)) continue;
      const auto it = lexicons.word_frequencies.find(token);
      const double freq = it == lexicons.word_frequencies.end() ? 0.0 : it->second;
      if (freq <= max_per_million) ++count;
    }
  }
  return count;
}

std::int64_t underrepresented_categories(
    std::span<const std::optional<std::vector<std::string>>> tags,
    const std::vector<bool>& in_train, double min_share, double min_presence) {
  if (tags.size() != in_train.size()) {
    fail_validation("under-represented categories: tags and split sizes differ");
  }
  if (std::none_of(tags.begin(), tags.end(), [](const auto& t) { return t.has_value(); })) {
    fail_validation("under-represented categories: tag field absent on all records");
  }
  std::map<std::string, std::pair<std::size_t, std::size_t>> occurrences;  // total, train
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!tags[i]) continue;
    const std::set<std::string> unique(tags[i]->begin(), tags[i]->end());
    for (const auto& category : unique) {
      auto& [total, train] = occurrences[category];
      ++total;
      if (in_train[i]) ++train;
    }
  }
  const auto n = static_cast<double>(tags.size());
  std::int64_t count = 0;
  for (const auto& [category, occ] : occurrences) {
    const auto [total, train] = occ;
    if (static_cast<double>(total) / n < min_presence) continue;
    if (static_cast<double>(train) / static_cast<double>(total) < min_share) ++count;
  }
  return count;
}

std::string_view to_string(KlDirection direction) {
  return direction == KlDirection::kTrainToTest ? "train_test" : "test_train";
}

KlDirection parse_kl_direction(std::string_view name) {
  if (name == "train_test") return KlDirection::kTrainToTest;
  if (name == "test_train") return KlDirection::kTestToTrain;
  fail_validation("unknown KL direction '" + std::string(name) +
                  "' (train_test|test_train)");
}

double source_kl_scaled(std::span<const std::string> sources,
                        std::span<const std::size_t> labels, std::size_t num_classes,
                        const std::vector<bool>& in_train, KlDirection direction) {
  const auto n = sources.size();
  if (labels.size() != n || in_train.size() != n) {
    fail_validation("source KL: input sizes differ");
  }
  if (n == 0) fail_validation("source KL: no records");
  std::map<std::string, std::size_t> vocab;
  for (const auto& s : sources) vocab.emplace(s, 0);
  std::size_t next = 0;
  for (auto& [name, id] : vocab) id = next++;
  const auto v = vocab.size();

  // [class][side][source]
  std::vector<std::vector<double>> train_counts(num_classes, std::vector<double>(v, 0.0));
  std::vector<std::vector<double>> test_counts(num_classes, std::vector<double>(v, 0.0));
  std::vector<double> train_totals(num_classes, 0.0), test_totals(num_classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = labels[i];
    if (c >= num_classes) fail_validation("source KL: label out of range");
    const auto s = vocab.at(sources[i]);
    if (in_train[i]) {
      train_counts[c][s] += 1.0;
      train_totals[c] += 1.0;
    } else {
      test_counts[c][s] += 1.0;
      test_totals[c] += 1.0;
    }
  }

  double divergence = 0.0;
  const double vd = static_cast<double>(v);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double class_total = train_totals[c] + test_totals[c];
    if (class_total == 0.0) continue;
    if (train_totals[c] == 0.0 || test_totals[c] == 0.0) {
      fail_validation("source KL: class #" + std::to_string(c) +
                      " has no examples on one side of the split");
    }
    double kl = 0.0;
    for (std::size_t s = 0; s < v; ++s) {
      const double p_train = (train_counts[c][s] + 1.0) / (train_totals[c] + vd);
      const double p_test = (test_counts[c][s] + 1.0) / (test_totals[c] + vd);
      const double p = direction == KlDirection::kTrainToTest ? p_train : p_test;
      const double q = direction == KlDirection::kTrainToTest ? p_test : p_train;
      kl += p * std::log(p / q);
    }
    divergence += (class_total / static_cast<double>(n)) * std::max(kl, 0.0);
  }
  const double scaled = -std::expm1(-divergence);
  return std::min(scaled, std::nextafter(1.0, 0.0));
}

std::vector<std::vector<TermScore>> ctfidf_topics(
    const std::vector<std::vector<std::string>>& texts_by_class, std::size_t top_n,
    const std::unordered_set<std::string>& stopwords) {
  if (texts_by_class.empty()) fail_validation("c-TF-IDF: no classes");
  std::vector<std::map<std::string, double>> tf(texts_by_class.size());
  std::map<std::string, double> f;
  double tokens = 0.0;
  for (std::size_t c = 0; c < texts_by_class.size(); ++c) {
    for (const auto& doc : texts_by_class[c]) {
      for (const auto& token : tokenize(doc)) {
        if (stopwords.contains(token)) continue;
        tf[c][token] += 1.0;
        f[token] += 1.0;
        tokens += 1.0;
      }
    }
  }
  if (tokens == 0.0) fail_validation("c-TF-IDF: empty corpus");
  const double avg = tokens / static_cast<double>(texts_by_class.size());

  std::vector<std::vector<TermScore>> out(texts_by_class.size());
  for (std::size_t c = 0; c < tf.size(); ++c) {
    auto& ranked = out[c];
    for (const auto& [term, count] : tf[c]) {
      ranked.push_back({term, count * std::log(1.0 + avg / f[term])});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.score > b.score;
    });
    if (ranked.size() > top_n) ranked.resize(top_n);
  }
  return out;
}

DiagnosticsReport compute_diagnostics(const Dataset& dataset, const AppliedSplit& split,
                                      const Lexicons* lexicons,
                                      const DiagnosticsOptions& options) {
  DiagnosticsReport report;
  const std::unordered_set<std::string> no_stopwords;
  const auto& stopwords = lexicons ? lexicons->stopwords : no_stopwords;

  std::vector<std::size_t> rows(split.train);
  rows.insert(rows.end(), split.test.begin(), split.test.end());
  std::sort(rows.begin(), rows.end());
  std::vector<bool> row_in_train(dataset.size(), false);
  for (const auto i : split.train) row_in_train[i] = true;
  std::vector<bool> in_train;
  for (const auto i : rows) in_train.push_back(row_in_train[i]);

  auto guard = [&](const char* feature, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      report.unavailable[feature] = e.what();
    }
  };

  const auto missing_text = std::count_if(rows.begin(), rows.end(), [&](auto i) {
    return !dataset.text(i).has_value();
  });
  if (missing_text > 0) {
    const auto why = "text missing on " + std::to_string(missing_text) + " records";
    for (const char* f : {"unigram_overlap", "avg_test_char_length", "rare_word_count",
                          "topics"}) {
      report.unavailable[f] = why;
    }
  } else {
    std::vector<std::string> train_texts, test_texts;
    for (const auto i : split.train) train_texts.push_back(*dataset.text(i));
    for (const auto i : split.test) test_texts.push_back(*dataset.text(i));

    guard("unigram_overlap", [&] {
      const auto r = unigram_overlap(train_texts, test_texts, stopwords, options.overlap);
      report.unigram_overlap = r.value;
      if (r.empty_test_examples > 0) {
        report.warnings.push_back(std::to_string(r.empty_test_examples) +
                                  " test examples have no tokens after stopword removal");
      }
    });
    guard("avg_test_char_length",
          [&] { report.avg_test_char_length = avg_test_char_length(test_texts); });
    if (!lexicons) {
      report.unavailable["rare_word_count"] = "no lexicons supplied";
    } else {
      guard("rare_word_count",
            [&] { report.rare_word_count = rare_word_count(test_texts, *lexicons); });
    }
    guard("topics", [&] {
      for (const bool train_side : {true, false}) {
        std::vector<std::vector<std::string>> by_class(dataset.num_classes());
        for (const auto i : train_side ? split.train : split.test) {
          by_class[dataset.label(i)].push_back(*dataset.text(i));
        }
        const auto topics = ctfidf_topics(by_class, options.top_n, stopwords);
        for (std::size_t c = 0; c < topics.size(); ++c) {
          report.topics.push_back(
              {train_side ? "train" : "test", dataset.labels()[c], topics[c]});
        }
      }
    });
  }

  std::vector<std::optional<std::vector<std::string>>> keywords, targets;
  for (const auto i : rows) {
    keywords.push_back(dataset.keywords(i));
    targets.push_back(dataset.targets(i));
  }
  const bool has_keywords =
      std::any_of(keywords.begin(), keywords.end(), [](auto& k) { return k.has_value(); });
  if (!has_keywords && lexicons && !lexicons->keyword_categories.empty() &&
      missing_text == 0) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      keywords[j] =
          match_keyword_categories(*dataset.text(rows[j]), lexicons->keyword_categories);
    }
  }
  guard("underrep_keywords", [&] {
    report.underrep_keywords = underrepresented_categories(
        keywords, in_train, options.min_share, options.min_presence);
  });
  guard("underrep_targets", [&] {
    report.underrep_targets = underrepresented_categories(
        targets, in_train, options.min_share, options.min_presence);
  });

  guard("source_kl_scaled", [&] {
    std::vector<std::string> sources;
    std::vector<std::size_t> labels;
    for (const auto i : rows) {
      if (!dataset.source(i)) fail_validation("source missing on record '" + dataset.id(i) + "'");
      sources.push_back(*dataset.source(i));
      labels.push_back(dataset.label(i));
    }
    report.source_kl_scaled = source_kl_scaled(sources, labels, dataset.num_classes(),
                                               in_train, options.kl_direction);
  });
  return report;
}

std::string diagnostics_to_json(const DiagnosticsReport& report) {
  json obj;
  auto put = [&](const char* key, const auto& value) {
    obj[key] = value ? json(*value) : json(nullptr);
  };
  put("unigram_overlap", report.unigram_overlap);
  put("avg_test_char_length", report.avg_test_char_length);
  put("rare_word_count", report.rare_word_count);
  put("underrep_keywords", report.underrep_keywords);
  put("underrep_targets", report.underrep_targets);
  put("source_kl_scaled", report.source_kl_scaled);
  json topics = json::array();
  for (const auto& t : report.topics) {
    json terms = json::array();
    for (const auto& ts : t.terms) terms.push_back({{"term", ts.term}, {"score", ts.score}});
    topics.push_back({{"set", t.set}, {"class", t.label}, {"terms", std::move(terms)}});
  }
  obj["topics"] = std::move(topics);
  obj["unavailable"] = report.unavailable;
  obj["warnings"] = report.warnings;
  return obj.dump(1, ' ', false, json::error_handler_t::replace) + "\n";
}

}  // namespace latentsplit
