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

#include <vector>

#include "styledverse/params.hpp"

namespace styledverse {

struct AdaDeltaConfig {
  double rho = 0.95;
  double eps = 1e-6;
};

/// Decayed squared-gradient and squared-update accumulators, one pair of
/// tensors per parameter.
struct AdaDeltaState {
  AdaDeltaConfig config;
  std::vector<Tensor> acc_grad;
  std::vector<Tensor> acc_update;

  AdaDeltaState() = default;
  AdaDeltaState(const ParameterStore& params, AdaDeltaConfig cfg);
};

/// One AdaDelta update in place:
///   acc_g  <- rho acc_g + (1 - rho) g^2
///   delta  <- -sqrt(acc_dx + eps) / sqrt(acc_g + eps) * g
///   acc_dx <- rho acc_dx + (1 - rho) delta^2
///   param  <- param + delta
/// Throws NonFiniteError before touching anything if a gradient is not finite.
void adadelta_step(ParameterStore& params, const Gradients& grads, AdaDeltaState& state);

}  // namespace styledverse
