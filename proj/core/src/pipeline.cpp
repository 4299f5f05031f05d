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

#include "latentsplit/pipeline.hpp"

#include <cstdio>
#include <map>

#include "json.hpp"
#include "latentsplit/digest.hpp"
#include "latentsplit/error.hpp"
#include "latentsplit/stats.hpp"
#include "latentsplit/subset_sum.hpp"
#include "latentsplit/targets.hpp"

namespace latentsplit {

using nlohmann::json;

Lexicons LexiconPaths::load() const {
  Lexicons lex;
  if (stopwords) lex.stopwords = load_word_list(*stopwords);
  if (frequencies) lex.word_frequencies = load_word_frequencies(*frequencies);
  if (common_words) lex.common_words = load_word_list(*common_words);
  if (keywords) lex.keyword_categories = load_keyword_categories(*keywords);
  return lex;
}

void PipelineConfig::validate() const {
  if (input.empty()) fail_validation("no input dataset given");
  if (!std::filesystem::exists(input)) {
    fail_io("input '" + input.string() + "' does not exist");
  }
  if (output.empty()) fail_validation("no output directory given");
  if (!(ratio > 0.0 && ratio < 1.0)) fail_validation("ratio must lie in (0, 1)");
  if (!(holdout_ratio >= 0.0 && holdout_ratio < 1.0)) {
    fail_validation("holdout ratio must lie in [0, 1)");
  }
  kmeans.validate();
  if (split_seeds.empty()) fail_validation("at least one split seed is required");
  if (methods.empty()) fail_validation("at least one split method is required");
  for (const auto m : methods) {
    if (m == SplitMethod::kHoldout) fail_validation("'holdout' is not a split method");
  }
  for (const auto& p : {lexicons.stopwords, lexicons.frequencies, lexicons.common_words,
                        lexicons.keywords}) {
    if (p && !std::filesystem::exists(*p)) {
      fail_io("lexicon '" + p->string() + "' does not exist");
    }
  }
  if (probe_config.epochs < 0 || !(probe_config.learning_rate > 0.0)) {
    fail_validation("invalid probe configuration");
  }
}

namespace {

json path_or_null(const std::optional<std::filesystem::path>& p) {
  return p ? json(p->string()) : json(nullptr);
}

std::optional<std::filesystem::path> optional_path(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return std::filesystem::path(obj[key].get<std::string>());
}

json config_json(const PipelineConfig& c) {
  json methods = json::array();
  for (const auto m : c.methods) methods.push_back(to_string(m));
  return {
      {"input", c.input.string()},
      {"format", c.format ? json(*c.format == DatasetFormat::kJsonl ? "jsonl" : "binary")
                          : json(nullptr)},
      {"output", c.output.string()},
      {"ratio", c.ratio},
      {"holdout_ratio", c.holdout_ratio},
      {"holdout_seed", c.holdout_seed},
      {"kmeans",
       {{"k_min", c.kmeans.k_min},
        {"k_max", c.kmeans.k_max},
        {"n_init", c.kmeans.n_init},
        {"max_iter", c.kmeans.max_iter},
        {"seeds", c.kmeans.seeds},
        {"tolerance", c.kmeans.tolerance}}},
      {"split_seeds", c.split_seeds},
      {"methods", methods},
      {"farthest", to_string(c.farthest)},
      {"quota", to_string(c.quota)},
      {"kl_direction", to_string(c.kl_direction)},
      {"lexicons",
       {{"stopwords", path_or_null(c.lexicons.stopwords)},
        {"frequencies", path_or_null(c.lexicons.frequencies)},
        {"common_words", path_or_null(c.lexicons.common_words)},
        {"keywords", path_or_null(c.lexicons.keywords)}}},
      {"diagnostics", c.diagnostics},
      {"probe", c.probe},
      {"probe_config",
       {{"learning_rate", c.probe_config.learning_rate},
        {"epochs", c.probe_config.epochs},
        {"l2", c.probe_config.l2},
        {"seed", c.probe_config.seed},
        {"unit_norm", c.probe_config.unit_norm}}},
      {"jobs", c.jobs},
      {"cache_dir", path_or_null(c.cache_dir)},
  };
}

}  // namespace

std::string PipelineConfig::to_json() const { return config_json(*this).dump(1) + "\n"; }

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  PipelineConfig c;
  try {
    const auto obj = json::parse(text);
    if (!obj.is_object()) fail_validation("configuration must be a JSON object");
    if (obj.contains("input")) c.input = obj["input"].get<std::string>();
    if (obj.contains("format") && !obj["format"].is_null()) {
      c.format = parse_dataset_format(obj["format"].get<std::string>());
    }
    if (obj.contains("output")) c.output = obj["output"].get<std::string>();
    c.ratio = obj.value("ratio", c.ratio);
    c.holdout_ratio = obj.value("holdout_ratio", c.holdout_ratio);
    c.holdout_seed = obj.value("holdout_seed", c.holdout_seed);
    if (obj.contains("kmeans")) {
      const auto& k = obj["kmeans"];
      c.kmeans.k_min = k.value("k_min", c.kmeans.k_min);
      c.kmeans.k_max = k.value("k_max", c.kmeans.k_max);
      c.kmeans.n_init = k.value("n_init", c.kmeans.n_init);
      c.kmeans.max_iter = k.value("max_iter", c.kmeans.max_iter);
      c.kmeans.seeds = k.value("seeds", c.kmeans.seeds);
      c.kmeans.tolerance = k.value("tolerance", c.kmeans.tolerance);
    }
    c.split_seeds = obj.value("split_seeds", c.split_seeds);
    if (obj.contains("methods")) {
      c.methods.clear();
      for (const auto& m : obj["methods"]) {
        c.methods.push_back(parse_split_method(m.get<std::string>()));
      }
    }
    if (obj.contains("farthest")) c.farthest = parse_farthest_rule(obj["farthest"].get<std::string>());
    if (obj.contains("quota")) c.quota = parse_quota_mode(obj["quota"].get<std::string>());
    if (obj.contains("kl_direction")) {
      c.kl_direction = parse_kl_direction(obj["kl_direction"].get<std::string>());
    }
    if (obj.contains("lexicons")) {
      const auto& l = obj["lexicons"];
      c.lexicons.stopwords = optional_path(l, "stopwords");
      c.lexicons.frequencies = optional_path(l, "frequencies");
      c.lexicons.common_words = optional_path(l, "common_words");
      c.lexicons.keywords = optional_path(l, "keywords");
    }
    c.diagnostics = obj.value("diagnostics", c.diagnostics);
    c.probe = obj.value("probe", c.probe);
    if (obj.contains("probe_config")) {
      const auto& p = obj["probe_config"];
      c.probe_config.learning_rate = p.value("learning_rate", c.probe_config.learning_rate);
      c.probe_config.epochs = p.value("epochs", c.probe_config.epochs);
      c.probe_config.l2 = p.value("l2", c.probe_config.l2);
      c.probe_config.seed = p.value("seed", c.probe_config.seed);
      c.probe_config.unit_norm = p.value("unit_norm", c.probe_config.unit_norm);
    }
    c.jobs = obj.value("jobs", c.jobs);
    c.cache_dir = optional_path(obj, "cache_dir");
  } catch (const json::exception& e) {
    fail_validation(std::string("malformed configuration: ") + e.what());
  }
  return c;
}

std::string PipelineConfig::digest() const {
  auto obj = config_json(*this);
  for (const char* key : {"input", "output", "jobs", "cache_dir"}) obj.erase(key);
  return digest_hex(obj.dump());
}

PipelineConfig config_from_manifest(const std::filesystem::path& manifest) {
  json obj;
  try {
    obj = json::parse(read_file(manifest));
  } catch (const json::exception& e) {
    fail_validation("malformed manifest '" + manifest.string() + "': " + e.what());
  }
  if (!obj.contains("config")) fail_validation("manifest has no config object");
  return PipelineConfig::from_json(obj["config"].dump());
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

class PipelineRun {
 public:
  explicit PipelineRun(const PipelineConfig& config) : config_(config) {}

  PipelineSummary run() {
    try {
      execute();
    } catch (const Error& e) {
      write_manifest(false, e.what());
      throw Error(e.kind(), "[" + stage_ + "] " + e.what());
    } catch (const std::exception& e) {
      write_manifest(false, e.what());
      throw Error(ErrorKind::kValidation, "[" + stage_ + "] " + e.what());
    }
    return std::move(summary_);
  }

 private:
  void execute() {
    stage_ = "validate";
    config_.validate();
    std::filesystem::create_directories(config_.output / "splits");

    stage_ = "load";
    input_digest_ = digest_hex(read_file(config_.input));
    const auto dataset =
        load_dataset(config_.input, config_.format.value_or(guess_dataset_format(config_.input)));
    config_digest_ =
        Fnv1a().update(config_.digest()).update(dataset.digest()).hex();

    stage_ = "holdout";
    auto hold = independent_holdout(dataset, config_.holdout_ratio, config_.holdout_seed);
    add_warnings(hold.warnings);
    hold.split.config_digest = config_digest_;
    emit("splits/holdout.split.json", split_to_json(hold.split));
    const Dataset& working = hold.working;

    stage_ = "target";
    const auto target = compute_target(working, config_.ratio);
    add_warnings(target.warnings);
    target_json_ = {{"total", target.total}};
    for (std::size_t c = 0; c < working.num_classes(); ++c) {
      target_json_["per_class"][working.labels()[c]] = target.per_class[c];
    }

    const bool clustered = has(SplitMethod::kSubsetSum) || has(SplitMethod::kClosest);
    std::optional<ClusteringCache> cache;
    if (config_.cache_dir) cache.emplace(*config_.cache_dir);
    for (std::size_t s = 0; clustered && s < config_.kmeans.seeds.size(); ++s) {
      const auto cluster_seed = config_.kmeans.seeds[s];
      const auto split_seed = config_.split_seeds[s % config_.split_seeds.size()];
      stage_ = "cluster";
      const auto clusterings = kmeans_sweep_seed(working, config_.kmeans, cluster_seed,
                                                 config_.jobs, cache ? &*cache : nullptr);
      stage_ = "split";
      if (has(SplitMethod::kSubsetSum)) {
        auto outcome = subset_sum_split(working, clusterings, target, split_seed);
        add_split("subset_sum_seed" + std::to_string(cluster_seed), std::move(outcome.split), s);
      }
      if (has(SplitMethod::kClosest)) {
        ClosestConfig cc{config_.farthest, config_.quota, config_.jobs};
        auto outcome = closest_split(working, clusterings, target, split_seed, cc);
        add_warnings(outcome.warnings);
        const auto name = "closest_seed" + std::to_string(cluster_seed);
        emit("traces/" + name + ".trace.json", trace_to_json(outcome.trace));
        add_split(name, std::move(outcome.split), s);
      }
    }
    stage_ = "split";
    std::vector<std::size_t> random_index;
    if (has(SplitMethod::kRandom)) {
      for (std::size_t s = 0; s < config_.split_seeds.size(); ++s) {
        const auto seed = config_.split_seeds[s];
        random_index.push_back(summary_.splits.size());
        add_split("random_seed" + std::to_string(seed),
                  stratified_random_split(working, target, seed), s);
      }
    }

    if (config_.diagnostics) {
      stage_ = "diagnostics";
      std::optional<Lexicons> lexicons;
      if (config_.lexicons.any()) lexicons = config_.lexicons.load();
      DiagnosticsOptions options;
      options.kl_direction = config_.kl_direction;
      options.overlap.jobs = config_.jobs;
      for (auto& artifact : summary_.splits) {
        const auto applied = apply_split(working, artifact.split);
        artifact.diagnostics =
            compute_diagnostics(working, applied, lexicons ? &*lexicons : nullptr, options);
        add_warnings(artifact.diagnostics->warnings);
        emit("diagnostics/" + artifact.name + ".diagnostics.json",
             diagnostics_to_json(*artifact.diagnostics));
      }
    }

    if (config_.probe) {
      stage_ = "probe";
      run_probes(working, hold.holdout, random_index);
      stage_ = "correlate";
      correlate();
    }
    stage_ = "manifest";
    write_manifest(true, {});
  }

  bool has(SplitMethod m) const {
    return std::find(config_.methods.begin(), config_.methods.end(), m) !=
           config_.methods.end();
  }

  void add_warnings(const std::vector<std::string>& warnings) {
    summary_.warnings.insert(summary_.warnings.end(), warnings.begin(), warnings.end());
  }

  void add_split(std::string name, SplitResult split, std::size_t seed_position) {
    split.config_digest = config_digest_;
    emit("splits/" + name + ".split.json", split_to_json(split));
    summary_.splits.push_back(
        {std::move(name), std::move(split), seed_position, std::nullopt, std::nullopt});
  }

  void emit(const std::string& relative, const std::string& contents) {
    const auto path = config_.output / relative;
    std::filesystem::create_directories(path.parent_path());
    write_file_atomic(path, contents);
    outputs_[relative] = digest_hex(contents);
  }

  void run_probes(const Dataset& working, const Dataset& holdout,
                  const std::vector<std::size_t>& random_index) {
    std::vector<ProbeModel> models;
    std::vector<AppliedSplit> applied;
    for (const auto& artifact : summary_.splits) {
      applied.push_back(apply_split(working, artifact.split));
      models.push_back(train_probe(working, applied.back().train, config_.probe_config));
    }
    std::vector<std::size_t> holdout_rows(holdout.size());
    for (std::size_t i = 0; i < holdout_rows.size(); ++i) holdout_rows[i] = i;

    auto scored = [&](std::size_t i) {
      SplitComparison part;
      part.candidate = score(models[i], working, applied[i].test);
      if (!holdout.empty()) part.candidate_on_holdout = score(models[i], holdout, holdout_rows);
      return part;
    };

    std::string table =
        "split\tmethod\tk\ttopups\ttest_macro_f1\tbaseline_macro_f1\tmacro_f1_drop\t"
        "holdout_macro_f1\tbaseline_holdout_macro_f1\n";
    for (std::size_t i = 0; i < summary_.splits.size(); ++i) {
      auto& artifact = summary_.splits[i];
      std::size_t baseline = i;
      if (artifact.split.method != SplitMethod::kRandom && !random_index.empty()) {
        // Cluster seed s pairs with random split s (cycling).
        baseline = random_index[artifact.seed_position % random_index.size()];
      }
      auto own = scored(i);
      auto base = scored(baseline);
      SplitComparison cmp;
      cmp.candidate = own.candidate;
      cmp.baseline = base.candidate;
      cmp.candidate_on_holdout = own.candidate_on_holdout;
      cmp.baseline_on_holdout = base.candidate_on_holdout;
      cmp.macro_f1_drop = cmp.baseline.macro_f1 - cmp.candidate.macro_f1;
      emit("probe/" + artifact.name + ".probe.json", comparison_to_json(cmp));

      const auto& s = artifact.split;
      table += artifact.name + "\t" + std::string(to_string(s.method)) + "\t" +
               (s.k_chosen ? std::to_string(*s.k_chosen) : "-") + "\t" +
               std::to_string(s.individual_topups) + "\t" + fixed(cmp.candidate.macro_f1) +
               "\t" + fixed(cmp.baseline.macro_f1) + "\t" + fixed(cmp.macro_f1_drop) + "\t" +
               (cmp.candidate_on_holdout ? fixed(cmp.candidate_on_holdout->macro_f1) : "-") +
               "\t" +
               (cmp.baseline_on_holdout ? fixed(cmp.baseline_on_holdout->macro_f1) : "-") +
               "\n";
      artifact.comparison = std::move(cmp);
    }
    emit("probe/summary.tsv", table);
    summary_.drop_table = std::move(table);
  }

  void correlate() {
    std::map<std::string, std::vector<double>> features;
    std::vector<double> drops;
    bool complete = true;
    for (const auto& artifact : summary_.splits) {
      if (!artifact.comparison) complete = false;
    }
    json out = json::object();
    if (!complete || summary_.splits.empty()) return;
    for (const auto& artifact : summary_.splits) {
      drops.push_back(artifact.comparison->macro_f1_drop);
    }
    const std::vector<std::string> names{"unigram_overlap",   "avg_test_char_length",
                                         "rare_word_count",   "underrep_keywords",
                                         "underrep_targets",  "source_kl_scaled"};
    for (const auto& name : names) {
      std::vector<double> xs;
      for (const auto& artifact : summary_.splits) {
        if (!artifact.diagnostics) break;
        const auto& d = *artifact.diagnostics;
        std::optional<double> v;
        if (name == "unigram_overlap") v = d.unigram_overlap;
        if (name == "avg_test_char_length") v = d.avg_test_char_length;
        if (name == "rare_word_count" && d.rare_word_count) v = double(*d.rare_word_count);
        if (name == "underrep_keywords" && d.underrep_keywords) v = double(*d.underrep_keywords);
        if (name == "underrep_targets" && d.underrep_targets) v = double(*d.underrep_targets);
        if (name == "source_kl_scaled") v = d.source_kl_scaled;
        if (!v) break;
        xs.push_back(*v);
      }
      if (xs.size() != drops.size()) {
        out[name] = {{"unavailable", "feature missing on some splits"}};
        continue;
      }
      try {
        const auto r = pearson(xs, drops);
        out[name] = {{"r", r.r}, {"p", r.p}, {"n", xs.size()}};
      } catch (const Error& e) {
        out[name] = {{"unavailable", e.what()}};
      }
    }
    emit("correlations.json", out.dump(1) + "\n");
  }

  void write_manifest(bool complete, const std::string& error) {
    json manifest;
    manifest["tool"] = "latentsplit";
    manifest["format_version"] = 1;
    manifest["config"] = config_json(config_);
    manifest["config_digest"] = config_digest_;
    manifest["input_digest"] = input_digest_;
    manifest["switches"] = {{"farthest", to_string(config_.farthest)},
                            {"quota", to_string(config_.quota)},
                            {"kl_direction", to_string(config_.kl_direction)}};
    manifest["target"] = target_json_;
    manifest["outputs"] = outputs_;
    manifest["warnings"] = summary_.warnings;
    manifest["complete"] = complete;
    if (!complete) {
      manifest["failed_stage"] = stage_;
      manifest["error"] = error;
    }
    const auto path = config_.output / "manifest.json";
    std::error_code ec;
    std::filesystem::create_directories(config_.output, ec);
    write_file_atomic(path, manifest.dump(1) + "\n");
    summary_.manifest = path;
  }

  const PipelineConfig& config_;
  std::string stage_ = "init";
  std::string input_digest_;
  std::string config_digest_;
  json target_json_;
  std::map<std::string, std::string> outputs_;
  PipelineSummary summary_;
};

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& config) {
  return PipelineRun(config).run();
}

}  // namespace latentsplit
