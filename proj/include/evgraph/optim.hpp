// Copyright 2026 The EventGraph Authors.
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

// AdamW with decoupled weight decay and the warmed-up cosine learning-rate
// schedule.

#pragma once

#include <cstdint>
#include <vector>

#include "evgraph/autodiff.hpp"

namespace evgraph {

struct AdamWHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Moments per parameter, hyperparameters per parameter group.
template <typename Real>
struct OptimState {
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;
  std::uint64_t step = 0;
  std::vector<AdamWHyper> groups;
};

template <typename Real>
OptimState<Real> make_optim_state(const ParamStore<Real>& params,
                                  std::vector<AdamWHyper> groups);

// One bias-corrected update:
//   p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)
// grads[i] must match params[i]; throws ShapeError otherwise.
template <typename Real>
void adamw_step(ParamStore<Real>& params, const std::vector<Tensor<Real>>& grads,
                OptimState<Real>& state);

// Linear warmup from 0 to peak_lr over warmup_steps, then cosine decay to 0
// at total_steps. Throws ConfigError outside 0 <= step <= total_steps or
// when warmup_steps >= total_steps.
double lr_at_step(std::int64_t step, std::int64_t warmup_steps, std::int64_t total_steps,
                  double peak_lr);

}  // namespace evgraph
