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

// Pre-norm transformer encoder layer and parameter initialization helpers.

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "evgraph/ops.hpp"

namespace evgraph {

// Indices into a ParamStore for one layer.
struct BlockParams {
  std::size_t ln1_gain, ln1_bias;
  std::size_t w_query, b_query, w_key, b_key, w_value, b_value, w_out, b_out;
  std::size_t ln2_gain, ln2_bias;
  std::size_t w_ffn_in, b_ffn_in, w_ffn_out, b_ffn_out;
};

struct BlockOptions {
  std::size_t n_heads = 4;
  double dropout = 0.0;       // on both sublayer outputs
  double attn_dropout = 0.0;  // on attention weights
};

// Uniform in [-bound, bound), drawn identically on every platform.
template <typename Real>
void init_uniform(Tensor<Real>& t, double bound, std::mt19937_64& rng) {
  for (Real& v : t.data) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = static_cast<Real>((2.0 * u - 1.0) * bound);
  }
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out);

// Registers "<prefix>.*" parameters: FFN width 4 * d_model, weights Xavier
// uniform, biases zero, layer-norm gains one. The two projections feeding
// the residual stream have their bound multiplied by residual_scale.
template <typename Real>
BlockParams register_block(ParamStore<Real>& store, const std::string& prefix,
                           std::size_t d_model, int group, std::mt19937_64& rng,
                           double residual_scale = 1.0);

// Sinusoidal position table (rows, d).
template <typename Real>
Tensor<Real> positional_encoding(std::size_t rows, std::size_t d);

// x + attn(ln1(x)), then + ffn(ln2(.)). When use_positional is set the
// sinusoidal table is added to x first; without it the layer is
// row-permutation equivariant. Dropout sites site, site+1, site+2.
template <typename Real>
Var self_attention_block(Tape<Real>& t, Var x, const BlockParams& p, bool use_positional,
                         const BlockOptions& options, const ops::DropoutContext& ctx,
                         std::uint64_t site);

}  // namespace evgraph
