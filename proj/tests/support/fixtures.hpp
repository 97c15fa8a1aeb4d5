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

// Shared fixtures and brute-force oracles for the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "evgraph/autodiff.hpp"
#include "evgraph/corpus_io.hpp"
#include "evgraph/graph.hpp"

namespace evgraph::testing {

inline Sentence figure1_sentence() {
  return Sentence{"fig1", {"A", "Kurdish", "journalist", "died", "in", "a", "U.S.",
                           "friendly-fire", "accident", "in", "the", "north", "."}};
}

// Die: "died" with Agent "U.S."; Attack: "friendly-fire" with Attacker "U.S.".
inline std::vector<EventMention> figure1_mentions() {
  return {EventMention{Span{3, 4}, "Die", {Argument{"Agent", Span{6, 7}}}},
          EventMention{Span{7, 8}, "Attack", {Argument{"Attacker", Span{6, 7}}}}};
}

inline AnnotatedSentence figure1() { return {figure1_sentence(), figure1_mentions()}; }

inline Span random_span(std::mt19937_64& rng, int n_tokens, int max_len) {
  const int len = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(max_len, n_tokens)));
  const int start = static_cast<int>(rng() % static_cast<std::uint64_t>(n_tokens - len + 1));
  return Span{start, start + len};
}

// Random valid mention set. Argument spans come from a small pool so they
// are often shared across mentions; pool spans are frequently nested.
inline AnnotatedSentence random_mentions(std::mt19937_64& rng, const std::string& id) {
  const int n = 2 + static_cast<int>(rng() % 14);
  Sentence s{id, {}};
  for (int i = 0; i < n; ++i) s.tokens.push_back("w" + std::to_string(rng() % 50));
  std::vector<Span> pool;
  const int pool_size = 1 + static_cast<int>(rng() % 4);
  for (int i = 0; i < pool_size; ++i) {
    Span sp = random_span(rng, n, 6);
    pool.push_back(sp);
    if (sp.length() > 1 && rng() % 2) pool.push_back(Span{sp.start, sp.start + 1});  // nested
  }
  const char* types[] = {"Attack", "Die", "Meet", "Transport"};
  const char* roles[] = {"Agent", "Victim", "Place", "Instrument", "Target"};
  std::vector<EventMention> mentions;
  const int n_mentions = static_cast<int>(rng() % 5);
  for (int m = 0; m < n_mentions; ++m) {
    EventMention e{random_span(rng, n, 2), types[rng() % 4], {}};
    bool clash = false;
    for (const auto& o : mentions) clash |= o.trigger == e.trigger && o.event_type == e.event_type;
    if (clash) continue;
    const int n_args = static_cast<int>(rng() % 4);
    for (int a = 0; a < n_args; ++a) {
      Argument arg{roles[rng() % 5], rng() % 4 ? pool[rng() % pool.size()] : random_span(rng, n, 4)};
      if (std::find(e.arguments.begin(), e.arguments.end(), arg) == e.arguments.end())
        e.arguments.push_back(arg);
    }
    mentions.push_back(std::move(e));
  }
  return {std::move(s), std::move(mentions)};
}

// Order-insensitive form of a mention list.
inline std::vector<EventMention> canonical(std::vector<EventMention> ms) {
  for (auto& m : ms) std::sort(m.arguments.begin(), m.arguments.end());
  std::sort(ms.begin(), ms.end(), [](const EventMention& a, const EventMention& b) {
    return std::tie(a.trigger, a.event_type, a.arguments) <
           std::tie(b.trigger, b.event_type, b.arguments);
  });
  return ms;
}

// Largest number of compatible (left, right) pairs over all injective
// assignments, by enumeration.
// Argument tuples of one sentence, flattened.
inline std::vector<std::tuple<std::string, std::string, Span>> argument_tuples(const std::vector<EventMention>& ms) {
  std::vector<std::tuple<std::string, std::string, Span>> out;
  for (const auto& m : ms)
    for (const auto& a : m.arguments) out.emplace_back(m.event_type, a.role, a.span);
  return out;
}

inline bool overlap_oracle(const Span& p, const Span& g) {
  if (g.length() <= 5) return p == g;
  int inter = 0;
  for (int t = g.start; t < g.end; ++t) inter += p.start <= t && t < p.end;
  return 5 * inter >= 4 * g.length();
}

// A perturbed copy of gold: drops, duplicates, shifts and relabels.
inline std::vector<EventMention> perturb_mentions(const std::vector<EventMention>& gold, std::mt19937_64& rng,
                                  int n_tokens) {
  std::vector<EventMention> out;
  for (auto m : gold) {
    if (rng() % 5 == 0) continue;
    if (rng() % 6 == 0) m.event_type = "Meet";
    for (auto& a : m.arguments) {
      if (rng() % 4 == 0) a.span.end = std::min(n_tokens, a.span.end + 1);
      if (rng() % 6 == 0) a.role = "Place";
    }
    out.push_back(m);
    if (rng() % 5 == 0) out.push_back(m);
  }
  if (rng() % 3 == 0) out.push_back(EventMention{random_span(rng, n_tokens, 2), "Die", {}});
  return out;
}

inline std::size_t exhaustive_matching(std::size_t n_left, std::size_t n_right,
                                       const std::function<bool(std::size_t, std::size_t)>& ok) {
  std::size_t best = 0;
  std::vector<int> used(n_right, 0);
  std::function<void(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t count) {
    if (i == n_left) {
      best = std::max(best, count);
      return;
    }
    go(i + 1, count);
    for (std::size_t j = 0; j < n_right; ++j) {
      if (used[j] || !ok(i, j)) continue;
      used[j] = 1;
      go(i + 1, count + 1);
      used[j] = 0;
    }
  };
  go(0, 0);
  return best;
}

// Minimum total cost over all injections rows -> columns.
inline double brute_force_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size(), m = n ? cost[0].size() : 0;
  double best = INFINITY;
  std::vector<int> used(m, 0);
  std::function<void(std::size_t, double)> go = [&](std::size_t i, double total) {
    if (total >= best) return;
    if (i == n) {
      best = total;
      return;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      go(i + 1, total + cost[i][j]);
      used[j] = 0;
    }
  };
  go(0, 0.0);
  return best;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-4, std::abs(analytic) + std::abs(numeric));
}

// Central differences of a scalar function of every parameter element
// against the tape gradient. Returns the worst relative error. When
// max_per_param is nonzero only that many random entries per tensor are
// probed.
// Attention key biases shift every score of a row equally, so softmax
// cancels them.
inline bool is_key_bias(const std::string& name) {
  return name.size() >= 10 && name.compare(name.size() - 10, 10, "attn.b_key") == 0;
}

inline double gradient_check(ParamStore<double>& params,
                             const std::function<Var(Tape<double>&)>& build,
                             std::size_t max_per_param = 0, std::uint64_t seed = 0,
                             const std::function<bool(const std::string&)>& exact_zero = {},
                             double h = 1e-6) {
  std::vector<Tensor<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.value.shape);
  {
    Tape<double> t(&params, true);
    const Var out = build(t);
    t.backward(out);
    t.gradients().add_to(analytic, 1.0);
  }
  auto eval = [&] {
    Tape<double> t(&params, false);
    return t.value(build(t)).data.at(0);
  };
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<double>& v = params[pi].value;
    std::vector<std::size_t> probes(v.size());
    std::iota(probes.begin(), probes.end(), 0);
    if (max_per_param && probes.size() > max_per_param) {
      std::shuffle(probes.begin(), probes.end(), rng);
      probes.resize(max_per_param);
    }
    for (std::size_t i : probes) {
      const double old = v.data[i];
      v.data[i] = old + h;
      const double up = eval();
      v.data[i] = old - h;
      const double down = eval();
      v.data[i] = old;
      const double numeric = (up - down) / (2 * h);
      // Relative error is undefined where the exact gradient is zero; there
      // both sides must vanish instead.
      const double err = exact_zero && exact_zero(params[pi].name)
                             ? (std::max(std::abs(analytic[pi].data[i]), std::abs(numeric)) < 1e-6 ? 0.0 : 1.0)
                             : relative_error(analytic[pi].data[i], numeric);
      if (std::getenv("EVGRAPH_GRADCHECK_TRACE") && err > 1e-4)
        std::fprintf(stderr, "%s[%zu] analytic %.3e numeric %.3e\n", params[pi].name.c_str(), i,
                     analytic[pi].data[i], (up - down) / (2 * h));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double bound = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& x : t.data) x = u(rng);
  return t;
}

}  // namespace evgraph::testing
