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

#pragma once

// Randomized gradient-check cases, one per differentiable op.

#include <functional>
#include <string>
#include <vector>

#include "evgraph/ops.hpp"
#include "evgraph/transformer.hpp"
#include "support/fixtures.hpp"

namespace evgraph::testing {

inline constexpr double kGradTolerance = 1e-4;
inline constexpr int kGradSeeds = 20;

// Contracts an arbitrary tensor to a scalar with fixed random weights, so
// that every output element carries a distinct upstream gradient.
inline Var contract(Tape<double>& t, Var v, std::uint64_t seed) {
  const std::size_t n = t.value(v).size();
  std::mt19937_64 rng(seed ^ 0x5eed);
  const Var flat = ops::reshape(t, v, {1, n});
  return ops::linear(t, flat, t.constant(random_tensor({n, 1}, rng)), t.constant(Tensor<double>({1})));
}

struct Case {
  ParamStore<double> store;
  std::mt19937_64 rng;
  explicit Case(std::uint64_t seed) : rng(seed) {}
  std::size_t add(const std::string& name, Shape shape, double bound = 1.0) {
    return store.add(name, random_tensor(std::move(shape), rng, bound), 0);
  }
  std::size_t dim(std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); }
};

using Builder = std::function<Var(Tape<double>&)>;

struct OpCase {
  std::string name;
  std::function<Builder(Case&)> make;
};

// Worst relative error of one op over kGradSeeds random instances.
inline double worst_op_error(const OpCase& op) {
  double worst = 0.0;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    Case c(1000 + seed);
    const Builder build = op.make(c);
    worst = std::max(worst, gradient_check(c.store, [&](Tape<double>& t) {
      return contract(t, build(t), seed);
    }));
  }
  return worst;
}

// One pre-norm block on a 3x8 input, with and without positions and dropout.
inline double worst_block_error(bool positional) {
  double worst = 0.0;
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    Case c(2000 + seed);
    const BlockParams p = register_block(c.store, "blk", 8, 0, c.rng);
    for (auto& prm : c.store)
      if (prm.name.find("ln") != std::string::npos || prm.name.find(".b_") != std::string::npos)
        init_uniform(prm.value, 0.5, c.rng);
    const auto x = c.add("x", {3, 8});
    BlockOptions opts;
    opts.n_heads = 4;
    opts.dropout = seed % 2 ? 0.2 : 0.0;
    opts.attn_dropout = seed % 2 ? 0.1 : 0.0;
    const ops::DropoutContext ctx{seed % 2 == 1, 7, 1, 0};
    worst = std::max(worst, gradient_check(c.store, [&](Tape<double>& t) {
      return contract(t, self_attention_block(t, t.param(x), p, positional, opts, ctx, 100), seed);
    }, 0, 0, is_key_bias));
  }
  return worst;
}

inline std::vector<OpCase> op_cases() {
  return {
    {"matmul", [](Case& c) {
      const std::size_t n = c.dim(1, 4), k = c.dim(1, 5), m = c.dim(1, 4);
      const auto a = c.add("a", {n, k}), b = c.add("b", {k, m});
      return [=](Tape<double>& t) { return ops::matmul(t, t.param(a), t.param(b)); };
    }},
    {"linear", [](Case& c) {
      const std::size_t n = c.dim(1, 4), k = c.dim(1, 5), m = c.dim(1, 4);
      const auto x = c.add("x", {n, k}), w = c.add("w", {k, m}), b = c.add("b", {m});
      return [=](Tape<double>& t) { return ops::linear(t, t.param(x), t.param(w), t.param(b)); };
    }},
    {"add and scale", [](Case& c) {
      const std::size_t n = c.dim(1, 4), m = c.dim(1, 4);
      const auto a = c.add("a", {n, m}), b = c.add("b", {n, m});
      return [=](Tape<double>& t) {
        return ops::scale(t, ops::add(t, t.param(a), t.param(b)), -1.7);
      };
    }},
    {"gelu", [](Case& c) {
      const auto x = c.add("x", {c.dim(1, 4), c.dim(1, 6)}, 3.0);
      return [=](Tape<double>& t) { return ops::gelu(t, t.param(x)); };
    }},
    {"layer_norm", [](Case& c) {
      const std::size_t d = c.dim(2, 8);
      const auto x = c.add("x", {c.dim(1, 4), d}, 2.0), g = c.add("g", {d}), b = c.add("b", {d});
      return [=](Tape<double>& t) { return ops::layer_norm(t, t.param(x), t.param(g), t.param(b)); };
    }},
    {"dropout with a fixed mask", [](Case& c) {
      const auto x = c.add("x", {c.dim(1, 5), c.dim(1, 5)});
      return [=](Tape<double>& t) {
        return ops::dropout(t, t.param(x), 0.4, ops::DropoutContext{true, 3, 1, 2}, 7);
      };
    }},
    {"multi-head attention", [](Case& c) {
      const std::size_t heads = c.dim(1, 2), n = c.dim(1, 4), d = heads * c.dim(1, 3);
      const auto q = c.add("q", {n, d}), k = c.add("k", {n, d}), v = c.add("v", {n, d});
      const bool drop = c.rng() % 2;
      return [=](Tape<double>& t) {
        return ops::multi_head_attention(t, t.param(q), t.param(k), t.param(v), heads, drop ? 0.3 : 0.0,
                                         ops::DropoutContext{drop, 5, 0, 0}, 11);
      };
    }},
    {"gather_rows with repeated rows", [](Case& c) {
      const std::size_t rows = c.dim(2, 6);
      const auto table = c.add("table", {rows, c.dim(1, 4)});
      std::vector<std::size_t> pick;
      for (std::size_t i = 0; i < 5; ++i) pick.push_back(c.rng() % rows);
      pick.push_back(pick.front());
      return [=](Tape<double>& t) { return ops::gather_rows(t, table, pick); };
    }},
    {"attention_pool", [](Case& c) {
      const std::size_t d = c.dim(1, 5);
      const auto v = c.add("v", {c.dim(1, 4), d}), w = c.add("w", {d}, 2.0);
      return [=](Tape<double>& t) { return ops::attention_pool(t, t.param(v), t.param(w)); };
    }},
    {"concat_rows and reshape", [](Case& c) {
      const std::size_t d = c.dim(1, 4);
      const auto a = c.add("a", {c.dim(1, 3), d}), b = c.add("b", {c.dim(1, 3), d}),
                 e = c.add("e", {c.dim(1, 3), d});
      return [=](Tape<double>& t) {
        const Var two = ops::concat_rows(t, t.param(a), t.param(b));
        const Var three = ops::concat_rows(t, std::vector<Var>{t.param(e), two, t.param(a)});
        const std::size_t n = t.value(three).size();
        return ops::reshape(t, three, {n});
      };
    }},
    {"biaffine", [](Case& c) {
      const std::size_t n = c.dim(1, 3), m = c.dim(1, 4), d1 = c.dim(1, 3), d2 = c.dim(1, 3),
                        k = c.dim(1, 3);
      const auto x = c.add("x", {n, d1}), y = c.add("y", {m, d2}), u = c.add("u", {d1, k, d2}),
                 w = c.add("w", {d1 + d2, k}), b = c.add("b", {k});
      return [=](Tape<double>& t) {
        return ops::biaffine(t, t.param(x), t.param(y), t.param(u), t.param(w), t.param(b));
      };
    }},
    {"biaffine with shared input", [](Case& c) {
      const auto x = c.add("x", {2, 3}), u = c.add("u", {3, 1, 3}), w = c.add("w", {6, 1}),
                 b = c.add("b", {1});
      return [=](Tape<double>& t) {
        return ops::biaffine(t, t.param(x), t.param(x), t.param(u), t.param(w), t.param(b));
      };
    }},
    {"sum", [](Case& c) {
      const auto x = c.add("x", {c.dim(1, 4), c.dim(1, 4)});
      return [=](Tape<double>& t) { return ops::gelu(t, ops::sum(t, t.param(x))); };
    }},
    {"bce_with_logits", [](Case& c) {
      const std::size_t n = c.dim(1, 12);
      const auto z = c.add("z", {n}, 4.0);
      Tensor<double> target({n}), mask({n});
      for (std::size_t i = 0; i < n; ++i) {
        target.data[i] = static_cast<double>(c.rng() % 2);
        mask.data[i] = i == 0 || c.rng() % 3 != 0;
      }
      return [=](Tape<double>& t) { return ops::bce_with_logits(t, t.param(z), target, mask); };
    }},
    {"softmax_ce", [](Case& c) {
      const std::size_t rows = c.dim(1, 4), labels = c.dim(2, 5);
      const auto z = c.add("z", {rows, labels}, 3.0);
      std::vector<std::pair<std::size_t, std::size_t>> targets;
      for (std::size_t i = 0; i < rows + 1; ++i) targets.emplace_back(c.rng() % rows, c.rng() % labels);
      return [=](Tape<double>& t) { return ops::softmax_ce(t, t.param(z), targets); };
    }},
    {"weighted_sum", [](Case& c) {
      const auto a = c.add("a", {3}), b = c.add("b", {2, 2});
      return [=](Tape<double>& t) {
        return ops::weighted_sum(t, {ops::sum(t, ops::gelu(t, t.param(a))), ops::sum(t, ops::gelu(t, t.param(b)))},
                                 {0.3, 2.0});
      };
    }},
  };
}

}  // namespace evgraph::testing
