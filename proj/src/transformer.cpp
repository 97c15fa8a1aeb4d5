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

#include "evgraph/transformer.hpp"

#include <cmath>

namespace evgraph {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename Real>
BlockParams register_block(ParamStore<Real>& store, const std::string& prefix,
                           std::size_t d, int group, std::mt19937_64& rng,
                           double residual_scale) {
  auto weight = [&](const std::string& name, std::size_t in, std::size_t out,
                    double scale = 1.0) {
    Tensor<Real> w({in, out});
    init_uniform(w, scale * xavier_bound(in, out), rng);
    return store.add(prefix + "." + name, std::move(w), group);
  };
  auto vec = [&](const std::string& name, std::size_t n, Real fill) {
    return store.add(prefix + "." + name, Tensor<Real>({n}, fill), group);
  };
  const std::size_t ffn = 4 * d;
  BlockParams p{};
  p.ln1_gain = vec("ln1.gain", d, Real(1));
  p.ln1_bias = vec("ln1.bias", d, Real(0));
  p.w_query = weight("attn.w_query", d, d);
  p.b_query = vec("attn.b_query", d, Real(0));
  p.w_key = weight("attn.w_key", d, d);
  p.b_key = vec("attn.b_key", d, Real(0));
  p.w_value = weight("attn.w_value", d, d);
  p.b_value = vec("attn.b_value", d, Real(0));
  p.w_out = weight("attn.w_out", d, d, residual_scale);
  p.b_out = vec("attn.b_out", d, Real(0));
  p.ln2_gain = vec("ln2.gain", d, Real(1));
  p.ln2_bias = vec("ln2.bias", d, Real(0));
  p.w_ffn_in = weight("ffn.w_in", d, ffn);
  p.b_ffn_in = vec("ffn.b_in", ffn, Real(0));
  p.w_ffn_out = weight("ffn.w_out", ffn, d, residual_scale);
  p.b_ffn_out = vec("ffn.b_out", d, Real(0));
  return p;
}

template <typename Real>
Tensor<Real> positional_encoding(std::size_t rows, std::size_t d) {
  Tensor<Real> pe({rows, d});
  for (std::size_t pos = 0; pos < rows; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
      const double angle = static_cast<double>(pos) * freq;
      pe.data[pos * d + i] = static_cast<Real>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename Real>
Var self_attention_block(Tape<Real>& t, Var x, const BlockParams& p, bool use_positional,
                         const BlockOptions& options, const ops::DropoutContext& ctx,
                         std::uint64_t site) {
  const Tensor<Real>& X = t.value(x);
  if (X.rank() != 2) throw ShapeError("self_attention_block: input must be (rows, d_model)");
  if (use_positional)
    x = ops::add(t, x, t.constant(positional_encoding<Real>(X.shape[0], X.shape[1])));

  Var h = ops::layer_norm(t, x, t.param(p.ln1_gain), t.param(p.ln1_bias));
  Var q = ops::linear(t, h, t.param(p.w_query), t.param(p.b_query));
  Var k = ops::linear(t, h, t.param(p.w_key), t.param(p.b_key));
  Var v = ops::linear(t, h, t.param(p.w_value), t.param(p.b_value));
  Var a = ops::multi_head_attention(t, q, k, v, options.n_heads, options.attn_dropout, ctx, site);
  a = ops::linear(t, a, t.param(p.w_out), t.param(p.b_out));
  a = ops::dropout(t, a, options.dropout, ctx, site + 1);
  x = ops::add(t, x, a);

  h = ops::layer_norm(t, x, t.param(p.ln2_gain), t.param(p.ln2_bias));
  Var f = ops::gelu(t, ops::linear(t, h, t.param(p.w_ffn_in), t.param(p.b_ffn_in)));
  f = ops::linear(t, f, t.param(p.w_ffn_out), t.param(p.b_ffn_out));
  f = ops::dropout(t, f, options.dropout, ctx, site + 2);
  return ops::add(t, x, f);
}

template BlockParams register_block(ParamStore<float>&, const std::string&, std::size_t, int,
                                    std::mt19937_64&, double);
template BlockParams register_block(ParamStore<double>&, const std::string&, std::size_t, int,
                                    std::mt19937_64&, double);
template Tensor<float> positional_encoding(std::size_t, std::size_t);
template Tensor<double> positional_encoding(std::size_t, std::size_t);
template Var self_attention_block(Tape<float>&, Var, const BlockParams&, bool, const BlockOptions&,
                                  const ops::DropoutContext&, std::uint64_t);
template Var self_attention_block(Tape<double>&, Var, const BlockParams&, bool,
                                  const BlockOptions&, const ops::DropoutContext&, std::uint64_t);

}  // namespace evgraph
