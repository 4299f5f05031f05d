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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Positional arguments restrict the run to the named
// criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "latentsplit/closest_split.hpp"
#include "latentsplit/diagnostics.hpp"
#include "latentsplit/error.hpp"
#include "latentsplit/io.hpp"
#include "latentsplit/kmeans.hpp"
#include "latentsplit/pipeline.hpp"
#include "latentsplit/probe.hpp"
#include "latentsplit/random.hpp"
#include "latentsplit/stats.hpp"
#include "latentsplit/subset_sum.hpp"
#include "latentsplit/targets.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
namespace ls = latentsplit;
namespace lt = latentsplit::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "latentsplit_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------

Outcome subset_sum_optimality() {
  ls::CounterRng rng(2024, 0);
  double solver_seconds = 0;
  int mismatches = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t m = 1 + rng.below(15);
    const std::size_t classes = 2 + rng.below(3);
    std::vector<ls::ClusterProfile> profiles(m);
    std::vector<std::vector<std::int64_t>> counts(m);
    std::vector<std::int64_t> totals(classes, 0);
    for (std::size_t c = 0; c < m; ++c) {
      profiles[c].cluster_index = static_cast<int>(c);
      for (std::size_t j = 0; j < classes; ++j) {
        const auto v = static_cast<std::int64_t>(rng.below(40));
        profiles[c].counts.push_back(v);
        profiles[c].size += v;
        totals[j] += v;
      }
      counts[c] = profiles[c].counts;
    }
    ls::SplitTarget target;
    std::vector<std::int64_t> t;
    for (std::size_t j = 0; j < classes; ++j) {
      const auto v = static_cast<std::size_t>(rng.below(totals[j] / 2 + 2));
      target.per_class.push_back(v);
      target.total += v;
      t.push_back(static_cast<std::int64_t>(v));
    }
    const auto start = Clock::now();
    const auto sol = ls::subset_sum_select(profiles, target);
    solver_seconds += seconds_since(start);
    const auto best = ls::oracle::subset_sum(counts, t);
    if (sol.deficit_l1 != best.deficit_l1) ++mismatches;
  }
  return {mismatches == 0 && solver_seconds < 10.0,
          std::to_string(mismatches) + "/200 deficit mismatches, solver time " +
              fmt("%.3f", solver_seconds) + " s (limit 10 s)"};
}

// ---------------------------------------------------------------------------

// Shared by the split-validity and trace-replay criteria.
struct SplitCase {
  ls::Dataset dataset;
  ls::SplitTarget target;
  std::vector<ls::Clustering> clusterings;
  std::optional<ls::ClosestOutcome> closest;
  std::string closest_error;
};

ls::KMeansConfig validity_sweep() {
  ls::KMeansConfig c;
  c.k_min = 3;
  c.k_max = 30;
  c.n_init = 3;
  c.seeds = {42};
  return c;
}

std::vector<SplitCase>& split_cases() {
  static std::vector<SplitCase> cases;
  if (!cases.empty()) return cases;
  ls::CounterRng rng(77, 0);
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  for (int i = 0; i < 50; ++i) {
    lt::BlobSpec spec;
    spec.n = 500 + rng.below(4501);
    spec.dim = 8 + rng.below(121);
    spec.classes = 2 + rng.below(2);
    spec.blobs = 5 + rng.below(26);
    spec.seed = 1000 + static_cast<std::uint64_t>(i);
    SplitCase sc;
    sc.dataset = lt::make_blobs(spec);
    sc.target = ls::compute_target(sc.dataset, 0.1);
    sc.clusterings = ls::kmeans_sweep_seed(sc.dataset, validity_sweep(), 42, jobs);
    try {
      sc.closest = ls::closest_split(sc.dataset, sc.clusterings, sc.target, 0);
    } catch (const ls::Error& e) {
      sc.closest_error = e.what();
    }
    cases.push_back(std::move(sc));
  }
  return cases;
}

// Empty string when the split is a valid partition meeting the target.
std::string check_split(const ls::Dataset& ds, const ls::SplitTarget& target,
                        const ls::SplitResult& split) {
  std::set<std::string> train(split.train_ids.begin(), split.train_ids.end());
  std::set<std::string> test(split.test_ids.begin(), split.test_ids.end());
  if (train.size() != split.train_ids.size() || test.size() != split.test_ids.size()) {
    return "duplicate ids";
  }
  for (const auto& id : test) {
    if (train.count(id)) return "id on both sides: " + id;
  }
  if (train.size() + test.size() != ds.size()) return "not exhaustive";
  for (const auto& id : ds.ids()) {
    if (!train.count(id) && !test.count(id)) return "missing id " + id;
  }
  std::vector<std::size_t> counts(ds.num_classes(), 0);
  for (const auto& id : test) ++counts[ds.label(*ds.find(id))];
  if (counts != target.per_class) return "per-class test counts differ from target";
  return "";
}

Outcome split_validity() {
  int checked = 0;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < split_cases().size(); ++i) {
    const auto& sc = split_cases()[i];
    const auto tag = "dataset " + std::to_string(i) + ": ";
    auto check = [&](const char* method, const ls::SplitResult& s) {
      ++checked;
      const auto err = check_split(sc.dataset, sc.target, s);
      if (!err.empty()) problems.push_back(tag + method + " " + err);
    };
    try {
      check("subset_sum", ls::subset_sum_split(sc.dataset, sc.clusterings, sc.target, 0).split);
    } catch (const ls::Error& e) {
      problems.push_back(tag + "subset_sum " + e.what());
    }
    if (sc.closest) {
      check("closest", sc.closest->split);
    } else {
      problems.push_back(tag + "closest " + sc.closest_error);
    }
    check("random", ls::stratified_random_split(sc.dataset, sc.target, 0));
  }
  std::string detail = std::to_string(checked) + " splits checked over 50 datasets, " +
                       std::to_string(problems.size()) + " problems";
  for (std::size_t i = 0; i < problems.size() && i < 5; ++i) detail += "\n    " + problems[i];
  return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------

Outcome trace_replay() {
  int replayed = 0, replay_bad = 0, k_bad = 0;
  for (const auto& sc : split_cases()) {
    if (!sc.closest) continue;
    const auto& out = *sc.closest;
    const auto emitted = ls::trace_from_json(ls::trace_to_json(out.trace));
    const auto& clustering = *std::find_if(
        sc.clusterings.begin(), sc.clusterings.end(),
        [&](const ls::Clustering& c) { return c.k == emitted.k; });
    ++replayed;
    if (ls::replay_trace(emitted, sc.dataset, clustering) != out.split.test_ids) ++replay_bad;

    // Exhaustive re-run of every k.
    std::optional<std::pair<std::int64_t, int>> best;
    for (const auto& c : sc.clusterings) {
      const auto run = ls::closest_split_for_k(sc.dataset, c, sc.target);
      if (!run.feasible) continue;
      const std::pair<std::int64_t, int> key{run.individual_topups, c.k};
      if (!best || key < *best) best = key;
    }
    if (!best || best->second != out.split.k_chosen.value_or(-1) ||
        best->first != out.split.individual_topups) {
      ++k_bad;
    }
  }
  const bool all = replayed == static_cast<int>(split_cases().size());
  return {all && replay_bad == 0 && k_bad == 0,
          std::to_string(replayed) + " traces replayed, " + std::to_string(replay_bad) +
              " mismatched; " + std::to_string(k_bad) + " non-minimal k choices"};
}

// ---------------------------------------------------------------------------

Outcome kmeans_oracle() {
  ls::CounterRng rng(5150, 0);
  int wrong = 0, increasing = 0, runs = 0;
  double worst_gap = 0;
  auto check_history = [&](const ls::Clustering& c) {
    ++runs;
    for (std::size_t i = 1; i < c.inertia_history.size(); ++i) {
      // Relative slack covers summation-order rounding only.
      if (c.inertia_history[i] > c.inertia_history[i - 1] * (1 + 1e-12)) {
        ++increasing;
        return;
      }
    }
  };
  ls::KMeansConfig config;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng.below(7);
    const std::size_t d = 1 + rng.below(3);
    std::vector<float> flat;
    std::vector<std::vector<double>> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const auto v = static_cast<float>(10 * rng.uniform());
        flat.push_back(v);
        pts[i].push_back(v);
      }
    }
    const auto c = ls::kmeans(ls::MatrixView{flat, n, d}, 2, 42 + inst, config);
    const double best = ls::oracle::two_means_inertia(pts);
    const double gap = std::abs(c.inertia - best);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e-9 * std::max(1.0, best)) ++wrong;
    check_history(c);
  }
  for (const auto& sc : split_cases()) {
    for (const auto& c : sc.clusterings) check_history(c);
  }
  return {wrong == 0 && increasing == 0,
          std::to_string(wrong) + "/100 inertia mismatches (worst gap " +
              fmt("%.2e", worst_gap) + "); " + std::to_string(increasing) + "/" +
              std::to_string(runs) + " runs with an inertia increase"};
}

// ---------------------------------------------------------------------------

// Accuracy of the best threshold classifier along direction (cos a, sin a)
// in the (boundary, rotated) plane, for a = 0..179 degrees. Both
// orientations of the threshold are tried.
std::vector<double> linear_fit_accuracy(const ls::Dataset& ds,
                                        const std::vector<std::size_t>& rows) {
  std::vector<double> acc(180, 0.0);
  for (int step = 0; step < 180; ++step) {
    const double a = step * M_PI / 180.0;
    std::vector<std::pair<double, std::size_t>> proj;
    for (const auto r : rows) {
      const auto v = ds.vector(r);
      proj.push_back({std::cos(a) * v[lt::PlantedInstance::kBoundaryAxis] +
                          std::sin(a) * v[lt::PlantedInstance::kRotatedAxis],
                      ds.label(r)});
    }
    std::sort(proj.begin(), proj.end());
    std::size_t ones_above = 0;
    for (const auto& p : proj) ones_above += p.second;
    std::size_t zeros_below = 0;
    for (std::size_t cut = 0; cut <= proj.size(); ++cut) {
      const double right = static_cast<double>(zeros_below + ones_above) / proj.size();
      acc[step] = std::max({acc[step], right, 1.0 - right});
      if (cut == proj.size()) break;
      if (proj[cut].second) {
        --ones_above;
      } else {
        ++zeros_below;
      }
    }
  }
  return acc;
}

Outcome planted_demonstration() {
  const auto start = Clock::now();
  const auto planted = lt::make_planted(5000, 3);
  const auto& ds = planted.dataset;

  // The instance must be what it claims: near blobs separable along the
  // boundary axis (angle 0), the remote blob along the rotated axis (90).
  std::vector<std::size_t> near, remote;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (planted.blob_of[i] == lt::PlantedInstance::kRotatedBlob ? remote : near).push_back(i);
  }
  const auto near_fit = linear_fit_accuracy(ds, near);
  const auto remote_fit = linear_fit_accuracy(ds, remote);
  const bool oracle_ok = near_fit[0] == 1.0 && remote_fit[90] == 1.0 &&
                         near_fit[90] < 0.7 && remote_fit[0] < 0.7;

  const auto hold = ls::independent_holdout(ds, 0.1, 0);
  const auto target = ls::compute_target(hold.working, 0.1);
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  ls::KMeansConfig kc;
  double drop_sum = 0, holdout_gap_sum = 0, holdout_gap_max = 0;
  int remote_in_test = 0, test_total = 0, pairs = 0;
  for (std::size_t s = 0; s < kc.seeds.size(); ++s) {
    const auto clusterings = ls::kmeans_sweep_seed(hold.working, kc, kc.seeds[s], jobs);
    const auto closest = ls::closest_split(hold.working, clusterings, target, s);
    const auto random = ls::stratified_random_split(hold.working, target, s);
    for (const auto& id : closest.split.test_ids) {
      const auto row = *ds.find(id);
      remote_in_test += planted.blob_of[row] == lt::PlantedInstance::kRotatedBlob;
      ++test_total;
    }
    for (std::uint64_t probe_seed = 0; probe_seed < 3; ++probe_seed) {
      ls::ProbeConfig pc;
      pc.seed = probe_seed;
      const auto cmp = ls::compare_splits(hold.working, closest.split, random, pc, &hold.holdout);
      drop_sum += cmp.macro_f1_drop;
      const double gap =
          std::abs(cmp.candidate_on_holdout->macro_f1 - cmp.baseline_on_holdout->macro_f1);
      holdout_gap_sum += gap;
      holdout_gap_max = std::max(holdout_gap_max, gap);
      ++pairs;
    }
  }
  const double drop = 100 * drop_sum / pairs;
  const double gap = 100 * holdout_gap_sum / pairs;
  const double elapsed = seconds_since(start);
  return {oracle_ok && drop >= 15.0 && gap <= 5.0 && elapsed < 120.0,
          "linear-fit oracle " + std::string(oracle_ok ? "ok" : "FAILED") +
              " (near blobs " + fmt("%.3f", near_fit[0]) + " on boundary axis, " +
              fmt("%.3f", near_fit[90]) + " on rotated; remote " + fmt("%.3f", remote_fit[90]) +
              " on rotated, " + fmt("%.3f", remote_fit[0]) + " on boundary); closest test side " + fmt("%.1f", 100.0 * remote_in_test / test_total) +
              "% rotated blob; mean macro-F1 drop " + fmt("%.2f", drop) +
              " pts (need >= 15); mean holdout gap " + fmt("%.2f", gap) + " pts, max " +
              fmt("%.2f", 100 * holdout_gap_max) + " (need <= 5); " + fmt("%.1f", elapsed) +
              " s (limit 120 s)"};
}

// ---------------------------------------------------------------------------

const std::vector<std::string> kWords{"hate", "love", "the",  "a",    "cats", "dogs",
                                      "run",  "fast", "slow", "red",  "blue", "sky",
                                      "sea",  "moon", "zap",  "quiz", "of",   "and"};

std::string toy_text(ls::CounterRng& rng) {
  std::string s;
  const auto n = 1 + rng.below(10);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i) s += rng.below(3) ? " " : ", ";
    s += kWords[rng.below(kWords.size())];
  }
  return s;
}

Outcome diagnostics_oracles() {
  ls::CounterRng rng(31337, 0);
  double worst = 0;
  int failures = 0;
  auto compare = [&](double got, double want) {
    const double e = std::abs(got - want);
    worst = std::max(worst, e);
    if (!(e <= 1e-9)) ++failures;
  };
  const std::vector<std::string> stop{"the", "a", "of", "and"};
  const std::unordered_set<std::string> stop_set(stop.begin(), stop.end());
  const char* sources[] = {"reddit", "gab", "twitter", "forum"};
  for (int corpus = 0; corpus < 20; ++corpus) {
    const std::size_t n = 30 + rng.below(50);
    const std::size_t classes = 2 + rng.below(2);
    std::vector<std::string> texts, src, train_texts, test_texts;
    std::vector<std::size_t> labels;
    std::vector<bool> in_train;
    for (std::size_t i = 0; i < n; ++i) {
      texts.push_back(toy_text(rng));
      src.push_back(sources[rng.below(4)]);
      labels.push_back(i % classes);
      // Every class keeps at least one example on each side.
      in_train.push_back(i < 2 * classes ? i < classes : rng.below(4) != 0);
      (in_train.back() ? train_texts : test_texts).push_back(texts.back());
    }
    compare(ls::unigram_overlap(train_texts, test_texts, stop_set).value,
            ls::oracle::unigram_overlap(train_texts, test_texts, stop));
    for (const bool fwd : {true, false}) {
      compare(ls::source_kl_scaled(src, labels, classes, in_train,
                                   fwd ? ls::KlDirection::kTrainToTest
                                       : ls::KlDirection::kTestToTrain),
              ls::oracle::source_kl_scaled(src, labels, in_train, fwd));
    }
    std::vector<double> xs, ys;
    for (int i = 0; i < 12; ++i) {
      xs.push_back(rng.uniform());
      ys.push_back(xs.back() * (rng.uniform() - 0.3) + rng.uniform());
    }
    compare(ls::pearson(xs, ys).r, ls::oracle::pearson_r(xs, ys));

    std::vector<std::vector<std::string>> by_class(classes);
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(texts[i]);
    const auto scores = ls::oracle::ctfidf_scores(by_class);
    const auto topics = ls::ctfidf_topics(by_class, 5);
    for (std::size_t c = 0; c < classes; ++c) {
      // Top terms: oracle scores sorted by score desc, term asc.
      std::vector<std::pair<double, std::string>> ranked;
      for (const auto& [t, v] : scores[c]) ranked.push_back({-v, t});
      std::sort(ranked.begin(), ranked.end());
      const auto top = std::min<std::size_t>(5, ranked.size());
      if (topics[c].size() != top) {
        ++failures;
        continue;
      }
      for (std::size_t j = 0; j < top; ++j) {
        compare(topics[c][j].score, -ranked[j].first);
        // Near-equal scores may legitimately order differently; only flag
        // a different term when the scores are clearly apart.
        if (topics[c][j].term != ranked[j].second &&
            std::abs(scores[c].at(topics[c][j].term) - (-ranked[j].first)) > 1e-9) {
          ++failures;
        }
      }
    }
  }
  // Perfectly linear data.
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7.5, 9}, up, down;
  for (const double v : x) {
    up.push_back(3.5 * v - 2);
    down.push_back(-0.25 * v + 8);
  }
  const double r_up = ls::pearson(x, up).r, r_down = ls::pearson(x, down).r;
  const bool linear_ok = std::abs(r_up - 1) <= 1e-9 && std::abs(r_down + 1) <= 1e-9;
  return {failures == 0 && linear_ok,
          "20 corpora, " + std::to_string(failures) + " mismatches, worst abs error " +
              fmt("%.2e", worst) + " (limit 1e-9); linear r = " + fmt("%.12f", r_up) +
              " / " + fmt("%.12f", r_down)};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> split_files(const fs::path& out) {
  std::map<std::string, std::string> files;
  for (const auto& dir : {"splits", "traces"}) {
    if (!fs::exists(out / dir)) continue;
    for (const auto& e : fs::directory_iterator(out / dir)) {
      files[std::string(dir) + "/" + e.path().filename().string()] = ls::read_file(e.path());
    }
  }
  return files;
}

Outcome determinism() {
  const auto dir = scratch("determinism");
  lt::BlobSpec spec;
  spec.n = 20085;
  spec.dim = 50;
  spec.blobs = 40;
  spec.classes = 2;
  spec.class_weights = {0.85, 0.15};
  spec.with_text = true;
  spec.with_metadata = true;
  spec.seed = 20085;
  ls::write_dataset(lt::make_blobs(spec), dir / "data.bin", ls::DatasetFormat::kBinary);

  ls::PipelineConfig config;
  config.input = dir / "data.bin";
  config.output = dir / "run1";
  config.jobs = std::max(1u, std::thread::hardware_concurrency());
  auto start = Clock::now();
  ls::run_pipeline(config);
  const double first = seconds_since(start);

  auto again = ls::config_from_manifest(config.output / "manifest.json");
  again.output = dir / "run2";
  start = Clock::now();
  ls::run_pipeline(again);
  const double second = seconds_since(start);

  const auto a = split_files(config.output);
  const auto b = split_files(again.output);
  const bool same = !a.empty() && a == b;
  return {same && first < 600 && second < 600,
          std::to_string(a.size()) + " split/trace files, " +
              (same ? "byte-identical" : "DIFFERENT") + "; wall time " + fmt("%.1f", first) +
              " s and " + fmt("%.1f", second) + " s (limit 600 s) on " +
              std::to_string(config.jobs) + " worker thread(s)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"subset_sum_optimality", subset_sum_optimality},
      {"split_validity", split_validity},
      {"trace_replay", trace_replay},
      {"kmeans_oracle", kmeans_oracle},
      {"planted_demonstration", planted_demonstration},
      {"diagnostics_oracles", diagnostics_oracles},
      {"determinism", determinism},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  for (const auto& name : only) {
    if (std::none_of(criteria.begin(), criteria.end(),
                     [&](const auto& c) { return c.first == name; })) {
      std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
      return 2;
    }
  }
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    const auto start = Clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(),
                seconds_since(start), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
