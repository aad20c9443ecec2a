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

#include "styledverse/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "styledverse/error.hpp"

namespace styledverse {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport finite_difference_check(const LossBuilder& loss, ParameterStore& params, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("finite_difference_check: eps must be positive");

  const auto evaluate = [&] {
    Tape tape(params);
    const double v = tape.value(loss(tape))[0];
    if (!std::isfinite(v)) throw NonFiniteError("finite_difference_check: loss is not finite");
    return v;
  };

  Gradients analytic;
  {
    Tape tape(params);
    const Var out = loss(tape);
    if (!std::isfinite(tape.value(out)[0])) throw NonFiniteError("finite_difference_check: loss is not finite");
    analytic = tape.backward(out);
  }

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    GradCheckGroup group;
    group.name = params[i].name;
    auto values = params[i].value.data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + eps;
      const double up = evaluate();
      values[k] = saved - eps;
      const double down = evaluate();
      values[k] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[i][k], numeric);
      if (k == 0 || err > group.max_rel_error) {
        group.max_rel_error = err;
        group.worst_index = k;
        group.analytic = analytic[i][k];
        group.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace styledverse
