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

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "evgraph/kernels.hpp"
#include "evgraph/scoring.hpp"
#include "evgraph/synthetic.hpp"

namespace {

using namespace evgraph;

struct Operands {
  std::vector<float> a, b, c;
};

Operands make(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Operands o{std::vector<float>(n * n), std::vector<float>(n * n), std::vector<float>(n * n)};
  for (auto& x : o.a) x = u(rng);
  for (auto& x : o.b) x = u(rng);
  return o;
}

template <void (*Gemm)(const float*, const float*, float*, std::size_t, std::size_t,
                       std::size_t)>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Operands o = make(n);
  for (auto _ : state) {
    Gemm(o.a.data(), o.b.data(), o.c.data(), n, n, n);
    benchmark::DoNotOptimize(o.c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

BENCHMARK(BM_Gemm<kernels::serial::gemm_nn<float>>)->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<kernels::gemm_nn<float>>)->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<kernels::serial::gemm_nt<float>>)->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<kernels::gemm_nt<float>>)->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<kernels::serial::gemm_tn<float>>)->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<kernels::gemm_tn<float>>)->Arg(64)->Arg(256);

template <ScoreReport (*Score)(const Corpus&, const Corpus&)>
void BM_Score(benchmark::State& state) {
  const Corpus gold = gen_synthetic(7, static_cast<std::size_t>(state.range(0)), 5, 6);
  const Corpus pred = gen_synthetic(7, static_cast<std::size_t>(state.range(0)), 5, 6);
  for (auto _ : state) benchmark::DoNotOptimize(Score(pred, gold));
}

BENCHMARK(BM_Score<serial::score_report>)->Arg(2000);
BENCHMARK(BM_Score<score_report>)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
