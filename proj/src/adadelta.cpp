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

#include "styledverse/adadelta.hpp"

#include <cmath>

namespace styledverse {

AdaDeltaState::AdaDeltaState(const ParameterStore& params, AdaDeltaConfig cfg) : config(cfg) {
  acc_grad.reserve(params.size());
  acc_update.reserve(params.size());
  for (const auto& p : params) {
    acc_grad.emplace_back(p.value.shape());
    acc_update.emplace_back(p.value.shape());
  }
}

void adadelta_step(ParameterStore& params, const Gradients& grads, AdaDeltaState& state) {
  if (grads.size() != params.size() || state.acc_grad.size() != params.size()) {
    throw ShapeError("adadelta_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape()) {
      throw ShapeError("adadelta_step: gradient shape mismatch for " + params[i].name);
    }
    grads[i].check_finite("gradient of " + params[i].name);
  }

  const double rho = state.config.rho;
  const double eps = state.config.eps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value.data();
    auto g = grads[i].data();
    auto eg = state.acc_grad[i].data();
    auto ex = state.acc_update[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      eg[k] = rho * eg[k] + (1.0 - rho) * g[k] * g[k];
      const double delta = -std::sqrt(ex[k] + eps) / std::sqrt(eg[k] + eps) * g[k];
      ex[k] = rho * ex[k] + (1.0 - rho) * delta * delta;
      p[k] += delta;
    }
  }
}

}  // namespace styledverse
