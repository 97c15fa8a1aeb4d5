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

#include "evgraph/optim.hpp"

#include <cmath>
#include <numbers>

namespace evgraph {

template <typename Real>
OptimState<Real> make_optim_state(const ParamStore<Real>& params,
                                  std::vector<AdamWHyper> groups) {
  OptimState<Real> s;
  for (const auto& p : params) {
    if (p.group < 0 || static_cast<std::size_t>(p.group) >= groups.size())
      throw ConfigError("parameter '" + p.name + "' belongs to undefined group " +
                        std::to_string(p.group));
    s.m.emplace_back(p.value.shape);
    s.v.emplace_back(p.value.shape);
  }
  s.groups = std::move(groups);
  return s;
}

template <typename Real>
void adamw_step(ParamStore<Real>& params, const std::vector<Tensor<Real>>& grads,
                OptimState<Real>& state) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw ShapeError("adamw_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<Real>& p = params[i];
    if (grads[i].shape != p.value.shape)
      throw ShapeError("adamw_step: gradient of '" + p.name + "' has shape " +
                       shape_str(grads[i].shape) + ", expected " + shape_str(p.value.shape));
    const AdamWHyper& h = state.groups[p.group];
    const Real b1 = static_cast<Real>(h.beta1), b2 = static_cast<Real>(h.beta2);
    const Real c1 = static_cast<Real>(1.0 - std::pow(h.beta1, t));
    const Real c2 = static_cast<Real>(1.0 - std::pow(h.beta2, t));
    const Real lr = static_cast<Real>(h.lr);
    const Real decay = static_cast<Real>(1.0 - h.lr * h.weight_decay);
    const Real eps = static_cast<Real>(h.eps);
    Real* w = p.value.ptr();
    Real* m = state.m[i].ptr();
    Real* v = state.v[i].ptr();
    const Real* g = grads[i].ptr();
    const long n = static_cast<long>(p.value.size());
#pragma omp parallel for schedule(static) if (n > (1 << 16))
    for (long j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
      v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
      const Real m_hat = m[j] / c1;
      const Real v_hat = v[j] / c2;
      w[j] = w[j] * decay - lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

double lr_at_step(std::int64_t step, std::int64_t warmup_steps, std::int64_t total_steps,
                  double peak_lr) {
  if (step < 0 || step > total_steps || warmup_steps < 0 || warmup_steps >= total_steps)
    throw ConfigError("lr_at_step: need 0 <= step <= total and warmup < total (step " +
                      std::to_string(step) + ", warmup " + std::to_string(warmup_steps) +
                      ", total " + std::to_string(total_steps) + ")");
  if (step < warmup_steps)
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  const double progress = static_cast<double>(step - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template OptimState<float> make_optim_state(const ParamStore<float>&, std::vector<AdamWHyper>);
template OptimState<double> make_optim_state(const ParamStore<double>&, std::vector<AdamWHyper>);
template void adamw_step(ParamStore<float>&, const std::vector<Tensor<float>>&,
                         OptimState<float>&);
template void adamw_step(ParamStore<double>&, const std::vector<Tensor<double>>&,
                         OptimState<double>&);

}  // namespace evgraph
