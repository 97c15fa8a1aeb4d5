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

// Dense matrix kernels. The default versions split output rows across
// OpenMP threads; the serial versions are the reference implementations
// the tests and benchmarks compare against. Both accumulate every output
// element in the same order, so their results are bitwise identical for
// any thread count.
//
// All matrices are row-major and every kernel accumulates into C.

#pragma once

#include <cstddef>

namespace evgraph::kernels {

// Below this many multiply-adds a kernel stays on the calling thread.
inline constexpr std::size_t kParallelWork = std::size_t{1} << 15;

// C(n,m) += A(n,k) B(k,m)
template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m);

// C(n,m) += A(n,k) B(m,k)^T
template <typename Real>
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m);

// C(n,m) += A(k,n)^T B(k,m)
template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m);

namespace serial {

template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m);
template <typename Real>
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m);
template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m);

}  // namespace serial

// Number of threads the parallel kernels may use.
int max_threads();
void set_max_threads(int n);

}  // namespace evgraph::kernels
