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


// latentsplit command-line entry point.
//
// Exit codes: 0 ok, 2 validation error, 3 infeasible split, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latentsplit/closest_split.hpp"
#include "latentsplit/diagnostics.hpp"
#include "latentsplit/digest.hpp"
#include "latentsplit/error.hpp"
#include "latentsplit/io.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/pipeline.hpp"
#include "latentsplit/probe.hpp"
#include "latentsplit/subset_sum.hpp"
#include "latentsplit/targets.hpp"

namespace fs = std::filesystem;
using namespace latentsplit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

// Every flag is optional so that a config file can supply the value and an
// explicit flag can still override it.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> manifest;
  std::optional<std::string> input;
  std::optional<std::string> format;
  std::optional<std::string> output;
  std::optional<double> ratio;
  std::optional<double> holdout_ratio;
  std::optional<std::uint64_t> holdout_seed;
  std::optional<int> k_min, k_max, n_init, max_iter;
  std::optional<double> tolerance;
  std::vector<std::uint64_t> kmeans_seeds;
  std::vector<std::uint64_t> split_seeds;
  std::vector<std::string> methods;
  std::optional<std::string> farthest, quota, kl_direction;
  std::optional<std::string> stopwords, frequencies, common_words, keywords;
  bool no_diagnostics = false;
  bool no_probe = false;
  std::optional<double> probe_lr, probe_l2;
  std::optional<int> probe_epochs;
  std::optional<std::uint64_t> probe_seed;
  bool unit_norm = false;
  std::optional<unsigned> jobs;
  std::optional<std::string> cache_dir;
};

void add_data_flags(CLI::App* app, Flags& f) {
  app->add_option("-i,--input", f.input, "Embedding file (JSONL or binary)");
  app->add_option("--format", f.format, "jsonl | binary (default: by extension)");
}

void add_kmeans_flags(CLI::App* app, Flags& f) {
  app->add_option("--k-min", f.k_min, "Smallest k in the sweep (3)");
  app->add_option("--k-max", f.k_max, "Largest k in the sweep (50)");
  app->add_option("--n-init", f.n_init, "k-means initialisations per (k, seed) (10)");
  app->add_option("--max-iter", f.max_iter, "Lloyd iteration cap (300)");
  app->add_option("--tolerance", f.tolerance, "Centroid shift tolerance (1e-4)");
  app->add_option("--kmeans-seeds", f.kmeans_seeds, "Cluster seeds (42 62 82)");
  app->add_option("--cache-dir", f.cache_dir, "Clustering cache directory");
}

void add_lexicon_flags(CLI::App* app, Flags& f) {
  app->add_option("--stopwords", f.stopwords, "Stopword list, one per line");
  app->add_option("--frequencies", f.frequencies, "Word frequency list (word<TAB>per-million)");
  app->add_option("--common-words", f.common_words, "Common-word list, one per line");
  app->add_option("--keywords", f.keywords, "Keyword categories (header line, indented phrases)");
  app->add_option("--kl-direction", f.kl_direction, "train_to_test | test_to_train");
}

void add_probe_flags(CLI::App* app, Flags& f) {
  app->add_option("--probe-lr", f.probe_lr, "Probe learning rate (0.1)");
  app->add_option("--probe-epochs", f.probe_epochs, "Probe epochs (500)");
  app->add_option("--probe-l2", f.probe_l2, "Probe L2 penalty (1e-3)");
  app->add_option("--probe-seed", f.probe_seed, "Probe seed (recorded)");
  app->add_flag("--unit-norm", f.unit_norm, "Normalise vectors before probing");
}

// Config file (or manifest) first, then any explicitly given flags.
PipelineConfig resolve(const Flags& f) {
  PipelineConfig c;
  if (f.manifest && f.config) fail_validation("--manifest and --config are exclusive");
  if (f.manifest) c = config_from_manifest(*f.manifest);
  if (f.config) c = PipelineConfig::from_json(read_file(*f.config));

  if (f.input) c.input = *f.input;
  if (f.format) c.format = parse_dataset_format(*f.format);
  if (f.output) c.output = *f.output;
  if (f.ratio) c.ratio = *f.ratio;
  if (f.holdout_ratio) c.holdout_ratio = *f.holdout_ratio;
  if (f.holdout_seed) c.holdout_seed = *f.holdout_seed;
  if (f.k_min) c.kmeans.k_min = *f.k_min;
  if (f.k_max) c.kmeans.k_max = *f.k_max;
  if (f.n_init) c.kmeans.n_init = *f.n_init;
  if (f.max_iter) c.kmeans.max_iter = *f.max_iter;
  if (f.tolerance) c.kmeans.tolerance = *f.tolerance;
  if (!f.kmeans_seeds.empty()) c.kmeans.seeds = f.kmeans_seeds;
  if (!f.split_seeds.empty()) c.split_seeds = f.split_seeds;
  if (!f.methods.empty()) {
    c.methods.clear();
    for (const auto& m : f.methods) c.methods.push_back(parse_split_method(m));
  }
  if (f.farthest) c.farthest = parse_farthest_rule(*f.farthest);
  if (f.quota) c.quota = parse_quota_mode(*f.quota);
  if (f.kl_direction) c.kl_direction = parse_kl_direction(*f.kl_direction);
  if (f.stopwords) c.lexicons.stopwords = *f.stopwords;
  if (f.frequencies) c.lexicons.frequencies = *f.frequencies;
  if (f.common_words) c.lexicons.common_words = *f.common_words;
  if (f.keywords) c.lexicons.keywords = *f.keywords;
  if (f.no_diagnostics) c.diagnostics = false;
  if (f.no_probe) c.probe = false;
  if (f.probe_lr) c.probe_config.learning_rate = *f.probe_lr;
  if (f.probe_epochs) c.probe_config.epochs = *f.probe_epochs;
  if (f.probe_l2) c.probe_config.l2 = *f.probe_l2;
  if (f.probe_seed) c.probe_config.seed = *f.probe_seed;
  if (f.unit_norm) c.probe_config.unit_norm = true;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.cache_dir) c.cache_dir = *f.cache_dir;
  return c;
}

Dataset load_input(const PipelineConfig& c) {
  if (c.input.empty()) fail_validation("no input file given (--input)");
  return load_dataset(c.input, c.format.value_or(guess_dataset_format(c.input)));
}

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_file_atomic(*path, text);
  } else {
    std::cout << text;
  }
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<Clustering> sweep_for(const Dataset& ds, const PipelineConfig& c,
                                  std::uint64_t seed) {
  std::optional<ClusteringCache> cache;
  if (c.cache_dir) cache.emplace(*c.cache_dir);
  return kmeans_sweep_seed(ds, c.kmeans, seed, c.jobs, cache ? &*cache : nullptr);
}

int cmd_holdout(const Flags& f, const std::optional<std::string>& working_out,
                const std::optional<std::string>& holdout_out,
                const std::optional<std::string>& split_out) {
  const auto c = resolve(f);
  const auto ds = load_input(c);
  const auto fmt = c.format.value_or(guess_dataset_format(c.input));
  auto h = independent_holdout(ds, c.holdout_ratio, c.holdout_seed);
  print_warnings(h.warnings);
  if (working_out) write_dataset(h.working, *working_out, fmt);
  if (holdout_out) write_dataset(h.holdout, *holdout_out, fmt);
  emit(split_out, split_to_json(h.split));
  std::cerr << "holdout: " << h.holdout.size() << " reserved, " << h.working.size()
            << " working\n";
  return kExitOk;
}

int cmd_cluster(const Flags& f) {
  const auto c = resolve(f);
  if (!c.cache_dir) fail_validation("cluster needs --cache-dir to store results");
  c.kmeans.validate();
  const auto ds = load_input(c);
  std::printf("seed\tk\tinertia\titerations\n");
  for (const auto seed : c.kmeans.seeds) {
    for (const auto& cl : sweep_for(ds, c, seed)) {
      std::printf("%llu\t%d\t%.6f\t%d\n", static_cast<unsigned long long>(seed), cl.k,
                  cl.inertia, cl.iterations_run);
    }
  }
  return kExitOk;
}

int cmd_split(const Flags& f, const std::string& method_name,
              std::optional<std::uint64_t> cluster_seed,
              std::optional<std::uint64_t> split_seed,
              const std::optional<std::string>& trace_out) {
  const auto c = resolve(f);
  const auto ds = load_input(c);
  const auto method = parse_split_method(method_name);
  const auto target = compute_target(ds, c.ratio);
  print_warnings(target.warnings);
  const auto cseed = cluster_seed.value_or(c.kmeans.seeds.front());
  const auto sseed = split_seed.value_or(c.split_seeds.front());

  SplitResult split;
  switch (method) {
    case SplitMethod::kRandom:
      split = stratified_random_split(ds, target, sseed);
      break;
    case SplitMethod::kSubsetSum: {
      c.kmeans.validate();
      const auto clusterings = sweep_for(ds, c, cseed);
      split = subset_sum_split(ds, clusterings, target, sseed).split;
      break;
    }
    case SplitMethod::kClosest: {
      c.kmeans.validate();
      const auto clusterings = sweep_for(ds, c, cseed);
      auto outcome =
          closest_split(ds, clusterings, target, sseed, {c.farthest, c.quota, c.jobs});
      print_warnings(outcome.warnings);
      if (trace_out) write_file_atomic(*trace_out, trace_to_json(outcome.trace));
      split = std::move(outcome.split);
      break;
    }
    case SplitMethod::kHoldout:
      fail_validation("use the holdout subcommand for independent holdouts");
  }
  split.config_digest = Fnv1a().update(c.digest()).update(ds.digest()).hex();
  emit(f.output, split_to_json(split));
  return kExitOk;
}

int cmd_diagnose(const Flags& f, const std::string& split_path) {
  const auto c = resolve(f);
  const auto ds = load_input(c);
  const auto applied = apply_split(ds, import_split(split_path));
  std::optional<Lexicons> lex;
  if (c.lexicons.any()) lex = c.lexicons.load();
  DiagnosticsOptions opts;
  opts.kl_direction = c.kl_direction;
  opts.overlap.jobs = c.jobs;
  const auto report = compute_diagnostics(ds, applied, lex ? &*lex : nullptr, opts);
  print_warnings(report.warnings);
  emit(f.output, diagnostics_to_json(report));
  return kExitOk;
}

int cmd_probe(const Flags& f, const std::string& split_path,
              const std::optional<std::string>& baseline_path,
              const std::optional<std::string>& holdout_path) {
  const auto c = resolve(f);
  const auto ds = load_input(c);
  const auto candidate = import_split(split_path);
  std::optional<Dataset> holdout;
  if (holdout_path) {
    holdout = load_dataset(*holdout_path, guess_dataset_format(*holdout_path));
  }
  if (!baseline_path) {
    const auto applied = apply_split(ds, candidate);
    const auto model = train_probe(ds, applied.train, c.probe_config);
    emit(f.output, score_to_json(score(model, ds, applied.test)));
    return kExitOk;
  }
  const auto cmp = compare_splits(ds, candidate, import_split(*baseline_path),
                                  c.probe_config, holdout ? &*holdout : nullptr);
  std::fprintf(stderr, "macro-F1 candidate %.4f baseline %.4f drop %.4f\n",
               cmp.candidate.macro_f1, cmp.baseline.macro_f1, cmp.macro_f1_drop);
  emit(f.output, comparison_to_json(cmp));
  return kExitOk;
}

int cmd_pipeline(const Flags& f) {
  const auto c = resolve(f);
  const auto summary = run_pipeline(c);
  print_warnings(summary.warnings);
  std::cout << summary.drop_table;
  std::cerr << "manifest: " << summary.manifest.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-based dataset splits for embedding datasets"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("-c,--config", f.config, "JSON config file (flags override)")
        ->check(CLI::ExistingFile);
    sub->add_option("-j,--jobs", f.jobs, "Worker threads (1)");
  };

  auto* holdout = app.add_subcommand("holdout", "Reserve an independent stratified holdout");
  std::optional<std::string> working_out, holdout_out;
  common(holdout);
  add_data_flags(holdout, f);
  holdout->add_option("--ratio", f.holdout_ratio, "Holdout fraction (0.1)");
  holdout->add_option("--seed", f.holdout_seed, "Holdout seed (0)");
  holdout->add_option("--working-out", working_out, "Write the remaining records here");
  holdout->add_option("--holdout-out", holdout_out, "Write the reserved records here");
  holdout->add_option("-o,--output", f.output, "Split file (default: stdout)");

  auto* cluster = app.add_subcommand("cluster", "Run the k-means sweep into a cache");
  common(cluster);
  add_data_flags(cluster, f);
  add_kmeans_flags(cluster, f);

  auto* split = app.add_subcommand("split", "Produce one split");
  std::string method;
  std::optional<std::uint64_t> cluster_seed, split_seed;
  std::optional<std::string> trace_out;
  common(split);
  add_data_flags(split, f);
  add_kmeans_flags(split, f);
  split->add_option("-m,--method", method, "subset_sum | closest | random")->required();
  split->add_option("--ratio", f.ratio, "Test fraction (0.1)");
  split->add_option("--cluster-seed", cluster_seed, "Cluster seed (first k-means seed)");
  split->add_option("--split-seed", split_seed, "Split seed (first split seed)");
  split->add_option("--farthest", f.farthest, "mean | min");
  split->add_option("--quota", f.quota, "per_class | total_only");
  split->add_option("--trace", trace_out, "Write the closest-split trace here");
  split->add_option("-o,--output", f.output, "Split file (default: stdout)");

  auto* diagnose = app.add_subcommand("diagnose", "Compute split diagnostics");
  std::string diag_split;
  common(diagnose);
  add_data_flags(diagnose, f);
  add_lexicon_flags(diagnose, f);
  diagnose->add_option("-s,--split", diag_split, "Split file")->required();
  diagnose->add_option("-o,--output", f.output, "Report file (default: stdout)");

  auto* probe = app.add_subcommand("probe", "Train and score the linear probe");
  std::string probe_split;
  std::optional<std::string> baseline, holdout_data;
  common(probe);
  add_data_flags(probe, f);
  add_probe_flags(probe, f);
  probe->add_option("-s,--split", probe_split, "Candidate split file")->required();
  probe->add_option("-b,--baseline", baseline, "Baseline split to compare against");
  probe->add_option("--holdout-data", holdout_data, "Independent holdout embeddings");
  probe->add_option("-o,--output", f.output, "Report file (default: stdout)");

  auto* pipeline = app.add_subcommand("pipeline", "Run the full pipeline");
  common(pipeline);
  pipeline->add_option("--manifest", f.manifest, "Re-run from a manifest's config")
      ->check(CLI::ExistingFile);
  add_data_flags(pipeline, f);
  add_kmeans_flags(pipeline, f);
  add_lexicon_flags(pipeline, f);
  add_probe_flags(pipeline, f);
  pipeline->add_option("-o,--output", f.output, "Output directory");
  pipeline->add_option("--ratio", f.ratio, "Test fraction (0.1)");
  pipeline->add_option("--holdout-ratio", f.holdout_ratio, "Holdout fraction (0.1)");
  pipeline->add_option("--holdout-seed", f.holdout_seed, "Holdout seed (0)");
  pipeline->add_option("--split-seeds", f.split_seeds, "Split seeds (0 1 2)");
  pipeline->add_option("--methods", f.methods, "subset_sum closest random");
  pipeline->add_option("--farthest", f.farthest, "mean | min");
  pipeline->add_option("--quota", f.quota, "per_class | total_only");
  pipeline->add_flag("--no-diagnostics", f.no_diagnostics, "Skip diagnostics");
  pipeline->add_flag("--no-probe", f.no_probe, "Skip probe comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*holdout) return cmd_holdout(f, working_out, holdout_out, f.output);
    if (*cluster) return cmd_cluster(f);
    if (*split) return cmd_split(f, method, cluster_seed, split_seed, trace_out);
    if (*diagnose) return cmd_diagnose(f, diag_split);
    if (*probe) return cmd_probe(f, probe_split, baseline, holdout_data);
    if (*pipeline) return cmd_pipeline(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kValidation: return kExitValidation;
      case ErrorKind::kInfeasible: return kExitInfeasible;
      case ErrorKind::kIo: return kExitIo;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
