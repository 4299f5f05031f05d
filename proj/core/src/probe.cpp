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

#include "latentsplit/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "latentsplit/error.hpp"

namespace latentsplit {

using nlohmann::json;

namespace {

void load_features(std::span<const float> v, bool unit_norm, double* out) {
  double n2 = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    out[j] = v[j];
    n2 += out[j] * out[j];
  }
  if (unit_norm && n2 > 0.0) {
    const double inv = 1.0 / std::sqrt(n2);
    for (std::size_t j = 0; j < v.size(); ++j) out[j] *= inv;
  }
}

/// Numerically stable in-place softmax; returns log-sum-exp.
double softmax(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return top + std::log(sum);
}

}  // namespace

std::vector<double> ProbeModel::logits(std::span<const float> x) const {
  if (x.size() != dim) fail_validation("probe: input dimension does not match model");
  std::vector<double> feat(dim);
  load_features(x, config.unit_norm, feat.data());
  std::vector<double> z(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double s = bias[c];
    const double* w = &weights[c * dim];
    for (std::size_t j = 0; j < dim; ++j) s += w[j] * feat[j];
    z[c] = s;
  }
  return z;
}

std::size_t ProbeModel::predict(std::span<const float> x) const {
  const auto z = logits(x);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

ProbeObjective::ProbeObjective(const Dataset& dataset, std::span<const std::size_t> rows,
                               double l2, bool unit_norm)
    : classes_(dataset.num_classes()), dim_(dataset.dim()), l2_(l2) {
  x_.resize(rows.size() * dim_);
  y_.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    load_features(dataset.vector(rows[i]), unit_norm, &x_[i * dim_]);
    y_.push_back(dataset.label(rows[i]));
  }
}

double ProbeObjective::value(std::span<const double> params) const {
  std::vector<double> scratch(num_params());
  return value_and_gradient(params, scratch);
}

double ProbeObjective::value_and_gradient(std::span<const double> params,
                                          std::span<double> gradient) const {
  const auto n = y_.size();
  const double* w = params.data();
  const double* b = params.data() + classes_ * dim_;
  std::fill(gradient.begin(), gradient.end(), 0.0);
  double* gw = gradient.data();
  double* gb = gradient.data() + classes_ * dim_;

  std::vector<double> z(classes_);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = &x_[i * dim_];
    for (std::size_t c = 0; c < classes_; ++c) {
      double s = b[c];
      const double* wc = w + c * dim_;
      for (std::size_t j = 0; j < dim_; ++j) s += wc[j] * x[j];
      z[c] = s;
    }
    const double truth_logit = z[y_[i]];
    loss += softmax(z) - truth_logit;
    z[y_[i]] -= 1.0;
    for (std::size_t c = 0; c < classes_; ++c) {
      double* g = gw + c * dim_;
      const double r = z[c];
      for (std::size_t j = 0; j < dim_; ++j) g[j] += r * x[j];
      gb[c] += r;
    }
  }
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  loss *= inv_n;
  for (auto& g : gradient) g *= inv_n;
  double reg = 0.0;
  for (std::size_t p = 0; p < classes_ * dim_; ++p) {
    reg += w[p] * w[p];
    gw[p] += l2_ * w[p];
  }
  return loss + 0.5 * l2_ * reg;
}

ProbeModel train_probe(const Dataset& dataset, std::span<const std::size_t> rows,
                       const ProbeConfig& config) {
  std::vector<bool> seen(dataset.num_classes(), false);
  for (const auto r : rows) seen[dataset.label(r)] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    fail_validation("probe: training data must contain at least two classes");
  }
  if (config.epochs < 0 || !(config.learning_rate > 0.0) || !(config.l2 >= 0.0)) {
    fail_validation("probe: invalid training configuration");
  }

  const ProbeObjective objective(dataset, rows, config.l2, config.unit_norm);
  std::vector<double> params(objective.num_params(), 0.0);
  std::vector<double> grad(params.size());
  ProbeModel model;
  model.classes = dataset.num_classes();
  model.dim = dataset.dim();
  model.labels = dataset.labels();
  model.config = config;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    model.loss_history.push_back(objective.value_and_gradient(params, grad));
    for (std::size_t p = 0; p < params.size(); ++p) {
      params[p] -= config.learning_rate * grad[p];
    }
  }
  model.loss_history.push_back(objective.value(params));

  const auto nw = model.classes * model.dim;
  model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(nw));
  model.bias.assign(params.begin() + static_cast<std::ptrdiff_t>(nw), params.end());
  for (const double v : params) {
    if (!std::isfinite(v)) fail_validation("probe: training diverged (non-finite parameters)");
  }
  return model;
}

ScoreReport score_confusion(std::vector<std::vector<std::int64_t>> confusion,
                            std::vector<std::string> labels) {
  const auto classes = confusion.size();
  ScoreReport r;
  r.per_class_f1.assign(classes, 0.0);
  std::int64_t total = 0, correct = 0;
  for (std::size_t t = 0; t < classes; ++t) {
    for (std::size_t p = 0; p < classes; ++p) total += confusion[t][p];
    correct += confusion[t][t];
  }
  r.accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::int64_t predicted = 0, actual = 0;
    for (std::size_t o = 0; o < classes; ++o) {
      predicted += confusion[o][c];
      actual += confusion[c][o];
    }
    const double tp = static_cast<double>(confusion[c][c]);
    const double precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    const double recall = actual > 0 ? tp / static_cast<double>(actual) : 0.0;
    r.per_class_f1[c] =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  r.macro_f1 = classes > 0 ? std::accumulate(r.per_class_f1.begin(), r.per_class_f1.end(),
                                             0.0) /
                                 static_cast<double>(classes)
                           : 0.0;
  r.confusion = std::move(confusion);
  r.labels = std::move(labels);
  return r;
}

ScoreReport score(const ProbeModel& model, const Dataset& dataset,
                  std::span<const std::size_t> rows) {
  if (rows.empty()) fail_validation("probe: cannot score an empty test set");
  if (dataset.dim() != model.dim) {
    fail_validation("probe: dataset dimension " + std::to_string(dataset.dim()) +
                    " does not match model dimension " + std::to_string(model.dim));
  }
  if (dataset.labels() != model.labels) {
    fail_validation("probe: dataset label vocabulary differs from the model's");
  }
  std::vector<std::vector<std::int64_t>> confusion(
      model.classes, std::vector<std::int64_t>(model.classes, 0));
  for (const auto r : rows) ++confusion[dataset.label(r)][model.predict(dataset.vector(r))];
  return score_confusion(std::move(confusion), model.labels);
}

SplitComparison compare_splits(const Dataset& dataset, const SplitResult& candidate,
                               const SplitResult& baseline, const ProbeConfig& config,
                               const Dataset* holdout) {
  const auto a = apply_split(dataset, candidate);
  const auto b = apply_split(dataset, baseline);
  const auto model_a = train_probe(dataset, a.train, config);
  const auto model_b = train_probe(dataset, b.train, config);

  SplitComparison out;
  out.candidate = score(model_a, dataset, a.test);
  out.baseline = score(model_b, dataset, b.test);
  out.macro_f1_drop = out.baseline.macro_f1 - out.candidate.macro_f1;
  if (holdout && !holdout->empty()) {
    std::vector<std::size_t> all(holdout->size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    out.candidate_on_holdout = score(model_a, *holdout, all);
    out.baseline_on_holdout = score(model_b, *holdout, all);
  }
  return out;
}

namespace {

json score_json(const ScoreReport& r) {
  json per_class = json::object();
  for (std::size_t c = 0; c < r.labels.size(); ++c) per_class[r.labels[c]] = r.per_class_f1[c];
  return {{"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"per_class_f1", per_class},
          {"labels", r.labels},
          {"confusion", r.confusion}};
}

}  // namespace

std::string score_to_json(const ScoreReport& report) {
  return score_json(report).dump(1) + "\n";
}

std::string comparison_to_json(const SplitComparison& c) {
  json obj;
  obj["candidate"] = score_json(c.candidate);
  obj["baseline"] = score_json(c.baseline);
  obj["candidate_on_holdout"] =
      c.candidate_on_holdout ? score_json(*c.candidate_on_holdout) : json(nullptr);
  obj["baseline_on_holdout"] =
      c.baseline_on_holdout ? score_json(*c.baseline_on_holdout) : json(nullptr);
  obj["macro_f1_drop"] = c.macro_f1_drop;
  return obj.dump(1) + "\n";
}

}  // namespace latentsplit
