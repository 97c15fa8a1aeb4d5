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

// Differentiable operations recorded on a Tape.

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "evgraph/autodiff.hpp"

namespace evgraph::ops {

// Counter-based dropout masks: the mask of element i at a dropout site is a
// pure function of (seed, site, step, item, i).
struct DropoutContext {
  bool enabled = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t item = 0;
};

// Uniform [0, 1) draw keyed by the five counters.
double dropout_uniform(const DropoutContext& ctx, std::uint64_t site, std::uint64_t i);

// (n,k) x (k,m) -> (n,m)
template <typename Real>
Var matmul(Tape<Real>& t, Var a, Var b);

// x (n,in) W (in,out) + b (out)
template <typename Real>
Var linear(Tape<Real>& t, Var x, Var w, Var b);

template <typename Real>
Var add(Tape<Real>& t, Var a, Var b);

template <typename Real>
Var scale(Tape<Real>& t, Var a, Real factor);

template <typename Real>
Var gelu(Tape<Real>& t, Var x);

// Row-wise normalization with learned gain and bias of shape (d).
template <typename Real>
Var layer_norm(Tape<Real>& t, Var x, Var gamma, Var beta, Real eps = Real(1e-5));

// Inverted dropout; identity when the context is disabled or rate is 0.
template <typename Real>
Var dropout(Tape<Real>& t, Var x, double rate, const DropoutContext& ctx,
            std::uint64_t site);

// Scaled dot-product attention with n_heads heads over q, k, v of shape
// (n, d). Attention weights pass through dropout at attn_rate.
template <typename Real>
Var multi_head_attention(Tape<Real>& t, Var q, Var k, Var v, std::size_t n_heads,
                         double attn_rate, const DropoutContext& ctx,
                         std::uint64_t site);

// Rows of a parameter matrix; gradients are recorded as sparse rows.
template <typename Real>
Var gather_rows(Tape<Real>& t, std::size_t param, const std::vector<std::size_t>& rows);

// Softmax-weighted sum of the rows of v (s,d) with scores v w, w of shape (d).
// Returns (1,d).
template <typename Real>
Var attention_pool(Tape<Real>& t, Var v, Var w);

// Stacks a (n,d) over b (m,d).
template <typename Real>
Var concat_rows(Tape<Real>& t, Var a, Var b);

// Stacks all parts, which share a width, top to bottom.
template <typename Real>
Var concat_rows(Tape<Real>& t, const std::vector<Var>& parts);

template <typename Real>
Var reshape(Tape<Real>& t, Var x, Shape shape);

// score[i,j,c] = x_i^T U[:,c,:] y_j + W[:,c]^T [x_i; y_j] + b[c]
// x (n,d1), y (m,d2), U (d1,k,d2), W (d1+d2,k), b (k) -> (n,m,k)
template <typename Real>
Var biaffine(Tape<Real>& t, Var x, Var y, Var u, Var w, Var b);

template <typename Real>
Var sum(Tape<Real>& t, Var x);

// Mean binary cross-entropy over entries with mask != 0; zero when the mask
// is empty. targets and mask have the shape of logits.
template <typename Real>
Var bce_with_logits(Tape<Real>& t, Var logits, const Tensor<Real>& targets,
                    const Tensor<Real>& mask);

// Mean softmax cross-entropy over (row, target label) pairs of a (R,L)
// logit matrix; zero when there are no pairs. A row may appear in several
// pairs.
template <typename Real>
Var softmax_ce(Tape<Real>& t, Var logits,
               const std::vector<std::pair<std::size_t, std::size_t>>& targets);

// sum_i weights[i] * scalars[i]
template <typename Real>
Var weighted_sum(Tape<Real>& t, const std::vector<Var>& scalars,
                 const std::vector<Real>& weights);

// Plain helpers shared by the model's inference path.
template <typename Real>
Real sigmoid(Real x);

template <typename Real>
Real bce_value(Real logit, Real target);

}  // namespace evgraph::ops
