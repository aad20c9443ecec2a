/* Copyright 2026 The Styledverse Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "styledverse/params.hpp"
#include "styledverse/tape.hpp"

namespace styledverse {

struct GradCheckGroup {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<GradCheckGroup> groups;
};

/// Builds a scalar loss on the given tape from the store's current values.
using LossBuilder = std::function<Var(Tape&)>;

/// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of `loss` against central differences
/// (f(p + eps) - f(p - eps)) / 2eps for every coordinate of every parameter.
/// Parameters are restored before returning.
GradCheckReport finite_difference_check(const LossBuilder& loss, ParameterStore& params, double eps);

}  // namespace styledverse
