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

#include <span>

namespace latentsplit {

struct PearsonResult {
  double r = 0.0;
  /// Two-sided p-value of the t statistic with n - 2 degrees of freedom.
  double p = 1.0;
};

/// Sample Pearson correlation. Needs equal lengths >= 3 and non-constant
/// inputs; throws Error(kValidation) otherwise.
PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

/// Regularised incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `dof`
/// degrees of freedom.
double student_t_two_sided(double t, double dof);

}  // namespace latentsplit
