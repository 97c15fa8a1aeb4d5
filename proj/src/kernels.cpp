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

#include "evgraph/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evgraph::kernels {

namespace {

constexpr std::size_t kBlock = 4;

// Rows [i0, i0+r) of C += A B where a(i, p) reads A. Every C element sums
// its k products in increasing p, like the serial reference.
template <typename Real, typename ReadA>
inline void rows_axpy(ReadA a, const Real* __restrict b, Real* __restrict c, std::size_t i0,
                      std::size_t r, std::size_t k, std::size_t m) {
  if (r == kBlock) {
    Real* __restrict c0 = c + i0 * m;
    Real* __restrict c1 = c0 + m;
    Real* __restrict c2 = c1 + m;
    Real* __restrict c3 = c2 + m;
    for (std::size_t p = 0; p < k; ++p) {
      const Real a0 = a(i0, p), a1 = a(i0 + 1, p), a2 = a(i0 + 2, p), a3 = a(i0 + 3, p);
      const Real* __restrict bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        const Real bj = bp[j];
        c0[j] += a0 * bj;
        c1[j] += a1 * bj;
        c2[j] += a2 * bj;
        c3[j] += a3 * bj;
      }
    }
    return;
  }
  for (std::size_t i = i0; i < i0 + r; ++i) {
    Real* __restrict ci = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = a(i, p);
      const Real* __restrict bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

template <typename Real, typename ReadA>
void blocked(ReadA a, const Real* b, Real* c, std::size_t n, std::size_t k, std::size_t m) {
  const long blocks = static_cast<long>((n + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static) if (n * k * m >= kParallelWork && blocks > 1)
  for (long blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kBlock;
    rows_axpy(a, b, c, i0, std::min(kBlock, n - i0), k, m);
  }
}

}  // namespace

template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m) {
  blocked([a, k](std::size_t i, std::size_t p) { return a[i * k + p]; }, b, c, n, k, m);
}

// The reference sums each dot product from zero before adding it to C, so
// the products are first accumulated into a zeroed buffer.
template <typename Real>
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m) {
  std::vector<Real> bt(k * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * m + j] = b[j * k + p];
  std::vector<Real> s(n * m, Real(0));
  blocked([a, k](std::size_t i, std::size_t p) { return a[i * k + p]; }, bt.data(), s.data(),
          n, k, m);
  for (std::size_t i = 0; i < n * m; ++i) c[i] += s[i];
}

template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m) {
  blocked([a, n](std::size_t i, std::size_t p) { return a[p * n + i]; }, b, c, n, k, m);
}

namespace serial {

template <typename Real>
void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      Real s = c[i * m + j];
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
      c[i * m + j] = s;
    }
}

template <typename Real>
void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      Real s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * m + j] += s;
    }
}

template <typename Real>
void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k,
             std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      Real s = c[i * m + j];
      for (std::size_t p = 0; p < k; ++p) s += a[p * n + i] * b[p * m + j];
      c[i * m + j] = s;
    }
}

}  // namespace serial

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

#define EVGRAPH_INSTANTIATE(Real)                                                   \
  template void gemm_nn<Real>(const Real*, const Real*, Real*, std::size_t,         \
                              std::size_t, std::size_t);                            \
  template void gemm_nt<Real>(const Real*, const Real*, Real*, std::size_t,         \
                              std::size_t, std::size_t);                            \
  template void gemm_tn<Real>(const Real*, const Real*, Real*, std::size_t,         \
                              std::size_t, std::size_t);                            \
  template void serial::gemm_nn<Real>(const Real*, const Real*, Real*, std::size_t, \
                                      std::size_t, std::size_t);                    \
  template void serial::gemm_nt<Real>(const Real*, const Real*, Real*, std::size_t, \
                                      std::size_t, std::size_t);                    \
  template void serial::gemm_tn<Real>(const Real*, const Real*, Real*, std::size_t, \
                                      std::size_t, std::size_t);

EVGRAPH_INSTANTIATE(float)
EVGRAPH_INSTANTIATE(double)

#undef EVGRAPH_INSTANTIATE

}  // namespace evgraph::kernels
