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

#include "evgraph/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "evgraph/kernels.hpp"

namespace evgraph::ops {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename Real>
void add_into(Tensor<Real>& dst, const Tensor<Real>& src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

double dropout_uniform(const DropoutContext& ctx, std::uint64_t site, std::uint64_t i) {
  std::uint64_t h = splitmix64(ctx.seed);
  h = splitmix64(h ^ site);
  h = splitmix64(h ^ ctx.step);
  h = splitmix64(h ^ ctx.item);
  h = splitmix64(h ^ i);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

template <typename Real>
Real sigmoid(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
Real bce_value(Real z, Real target) {
  return std::max(z, Real(0)) - z * target + std::log1p(std::exp(-std::abs(z)));
}

template <typename Real>
Var matmul(Tape<Real>& t, Var a, Var b) {
  const Tensor<Real>& A = t.value(a);
  const Tensor<Real>& B = t.value(b);
  require(A.rank() == 2 && B.rank() == 2 && A.shape[1] == B.shape[0],
          "matmul: " + shape_str(A.shape) + " x " + shape_str(B.shape));
  const std::size_t n = A.shape[0], k = A.shape[1], m = B.shape[1];
  Tensor<Real> C({n, m});
  kernels::gemm_nn(A.ptr(), B.ptr(), C.ptr(), n, k, m);
  return t.record(std::move(C), {a, b}, [a, b, n, k, m](Tape<Real>& tp, Var self) {
    const Tensor<Real>& dc = tp.grad(self);
    if (tp.needs_grad(a))
      kernels::gemm_nt(dc.ptr(), tp.value(b).ptr(), tp.grad(a).ptr(), n, m, k);
    if (tp.needs_grad(b))
      kernels::gemm_tn(tp.value(a).ptr(), dc.ptr(), tp.grad(b).ptr(), k, n, m);
  });
}

template <typename Real>
Var linear(Tape<Real>& t, Var x, Var w, Var b) {
  const Tensor<Real>& X = t.value(x);
  const Tensor<Real>& W = t.value(w);
  const Tensor<Real>& B = t.value(b);
  require(X.rank() == 2 && W.rank() == 2 && X.shape[1] == W.shape[0],
          "linear: x " + shape_str(X.shape) + " W " + shape_str(W.shape));
  require(B.size() == W.shape[1], "linear: bias " + shape_str(B.shape) +
                                      " does not match W " + shape_str(W.shape));
  const std::size_t n = X.shape[0], in = X.shape[1], out = W.shape[1];
  Tensor<Real> Y({n, out});
  for (std::size_t i = 0; i < n; ++i)
    std::copy(B.data.begin(), B.data.end(), Y.data.begin() + i * out);
  kernels::gemm_nn(X.ptr(), W.ptr(), Y.ptr(), n, in, out);
  return t.record(std::move(Y), {x, w, b}, [x, w, b, n, in, out](Tape<Real>& tp, Var self) {
    const Tensor<Real>& dy = tp.grad(self);
    if (tp.needs_grad(x))
      kernels::gemm_nt(dy.ptr(), tp.value(w).ptr(), tp.grad(x).ptr(), n, out, in);
    if (tp.needs_grad(w))
      kernels::gemm_tn(tp.value(x).ptr(), dy.ptr(), tp.grad(w).ptr(), in, n, out);
    if (tp.needs_grad(b)) {
      Tensor<Real>& db = tp.grad(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < out; ++j) db.data[j] += dy.data[i * out + j];
    }
  });
}

template <typename Real>
Var add(Tape<Real>& t, Var a, Var b) {
  const Tensor<Real>& A = t.value(a);
  const Tensor<Real>& B = t.value(b);
  require(A.shape == B.shape, "add: " + shape_str(A.shape) + " + " + shape_str(B.shape));
  Tensor<Real> C = A;
  add_into(C, B);
  return t.record(std::move(C), {a, b}, [a, b](Tape<Real>& tp, Var self) {
    const Tensor<Real>& dc = tp.grad(self);
    if (tp.needs_grad(a)) add_into(tp.grad(a), dc);
    if (tp.needs_grad(b)) add_into(tp.grad(b), dc);
  });
}

template <typename Real>
Var scale(Tape<Real>& t, Var a, Real factor) {
  Tensor<Real> C = t.value(a);
  for (Real& v : C.data) v *= factor;
  return t.record(std::move(C), {a}, [a, factor](Tape<Real>& tp, Var self) {
    const Tensor<Real>& dc = tp.grad(self);
    Tensor<Real>& da = tp.grad(a);
    for (std::size_t i = 0; i < dc.size(); ++i) da.data[i] += factor * dc.data[i];
  });
}

template <typename Real>
Var gelu(Tape<Real>& t, Var x) {
  const Tensor<Real>& X = t.value(x);
  Tensor<Real> Y(X.shape);
  const Real inv_sqrt2 = Real(1) / std::sqrt(Real(2));
  for (std::size_t i = 0; i < X.size(); ++i) {
    const Real v = X.data[i];
    Y.data[i] = Real(0.5) * v * (Real(1) + std::erf(v * inv_sqrt2));
  }
  return t.record(std::move(Y), {x}, [x, inv_sqrt2](Tape<Real>& tp, Var self) {
    const Tensor<Real>& dy = tp.grad(self);
    const Tensor<Real>& X = tp.value(x);
    Tensor<Real>& dx = tp.grad(x);
    const Real inv_sqrt_2pi = Real(1) / std::sqrt(Real(2) * std::numbers::pi_v<Real>);
    for (std::size_t i = 0; i < X.size(); ++i) {
      const Real v = X.data[i];
      const Real cdf = Real(0.5) * (Real(1) + std::erf(v * inv_sqrt2));
      const Real pdf = inv_sqrt_2pi * std::exp(Real(-0.5) * v * v);
      dx.data[i] += dy.data[i] * (cdf + v * pdf);
    }
  });
}

template <typename Real>
Var layer_norm(Tape<Real>& t, Var x, Var gamma, Var beta, Real eps) {
  const Tensor<Real>& X = t.value(x);
  const Tensor<Real>& G = t.value(gamma);
  const Tensor<Real>& B = t.value(beta);
  require(X.rank() == 2 && G.size() == X.shape[1] && B.size() == X.shape[1],
          "layer_norm: x " + shape_str(X.shape) + " gamma " + shape_str(G.shape));
  const std::size_t n = X.shape[0], d = X.shape[1];
  Tensor<Real> Y({n, d});
  Tensor<Real> xhat({n, d});
  std::vector<Real> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Real* xi = X.ptr() + i * d;
    Real mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<Real>(d);
    inv_std[i] = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = (xi[j] - mean) * inv_std[i];
      xhat.data[i * d + j] = h;
      Y.data[i * d + j] = G.data[j] * h + B.data[j];
    }
  }
  return t.record(std::move(Y), {x, gamma, beta},
                  [x, gamma, beta, n, d, xhat = std::move(xhat),
                   inv_std = std::move(inv_std)](Tape<Real>& tp, Var self) {
                    const Tensor<Real>& dy = tp.grad(self);
                    const Tensor<Real>& G = tp.value(gamma);
                    if (tp.needs_grad(gamma) || tp.needs_grad(beta)) {
                      Tensor<Real>& dg = tp.grad(gamma);
                      Tensor<Real>& db = tp.grad(beta);
                      for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j) {
                          dg.data[j] += dy.data[i * d + j] * xhat.data[i * d + j];
                          db.data[j] += dy.data[i * d + j];
                        }
                    }
                    if (!tp.needs_grad(x)) return;
                    Tensor<Real>& dx = tp.grad(x);
                    std::vector<Real> dh(d);
                    for (std::size_t i = 0; i < n; ++i) {
                      Real mean_dh = 0, mean_dh_h = 0;
                      for (std::size_t j = 0; j < d; ++j) {
                        dh[j] = dy.data[i * d + j] * G.data[j];
                        mean_dh += dh[j];
                        mean_dh_h += dh[j] * xhat.data[i * d + j];
                      }
                      mean_dh /= static_cast<Real>(d);
                      mean_dh_h /= static_cast<Real>(d);
                      for (std::size_t j = 0; j < d; ++j)
                        dx.data[i * d + j] +=
                            inv_std[i] * (dh[j] - mean_dh - xhat.data[i * d + j] * mean_dh_h);
                    }
                  });
}

template <typename Real>
Var dropout(Tape<Real>& t, Var x, double rate, const DropoutContext& ctx,
            std::uint64_t site) {
  if (!ctx.enabled || rate <= 0.0) return x;
  const Tensor<Real>& X = t.value(x);
  std::vector<Real> mask(X.size());
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < X.size(); ++i)
    mask[i] = dropout_uniform(ctx, site, i) >= rate ? keep_scale : Real(0);
  Tensor<Real> Y(X.shape);
  for (std::size_t i = 0; i < X.size(); ++i) Y.data[i] = X.data[i] * mask[i];
  return t.record(std::move(Y), {x}, [x, mask = std::move(mask)](Tape<Real>& tp, Var self) {
    const Tensor<Real>& dy = tp.grad(self);
    Tensor<Real>& dx = tp.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] += dy.data[i] * mask[i];
  });
}

template <typename Real>
Var multi_head_attention(Tape<Real>& t, Var q, Var k, Var v, std::size_t n_heads,
                         double attn_rate, const DropoutContext& ctx,
                         std::uint64_t site) {
  const Tensor<Real>& Q = t.value(q);
  const Tensor<Real>& K = t.value(k);
  const Tensor<Real>& V = t.value(v);
  require(Q.rank() == 2 && Q.shape == K.shape && Q.shape == V.shape,
          "attention: q " + shape_str(Q.shape) + " k " + shape_str(K.shape) + " v " +
              shape_str(V.shape));
  const std::size_t n = Q.shape[0], d = Q.shape[1];
  require(n_heads > 0 && d % n_heads == 0,
          "attention: width " + std::to_string(d) + " not divisible by " +
              std::to_string(n_heads) + " heads");
  const std::size_t dh = d / n_heads;
  const Real s = Real(1) / std::sqrt(static_cast<Real>(dh));
  const bool drop = ctx.enabled && attn_rate > 0.0;
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - attn_rate));

  // probs and kept mask per head, (h, n, n).
  std::vector<Real> probs(n_heads * n * n);
  std::vector<Real> mask(drop ? n_heads * n * n : 0);
  Tensor<Real> O({n, d});
  std::vector<Real> row(n);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        Real dot = 0;
        for (std::size_t e = 0; e < dh; ++e) dot += Q.data[i * d + off + e] * K.data[j * d + off + e];
        row[j] = dot * s;
        mx = std::max(mx, row[j]);
      }
      Real z = 0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        z += row[j];
      }
      Real* p = probs.data() + (h * n + i) * n;
      for (std::size_t j = 0; j < n; ++j) p[j] = row[j] / z;
      for (std::size_t j = 0; j < n; ++j) {
        Real pj = p[j];
        if (drop) {
          const std::size_t idx = (h * n + i) * n + j;
          mask[idx] = dropout_uniform(ctx, site, idx) >= attn_rate ? keep_scale : Real(0);
          pj *= mask[idx];
        }
        if (pj == Real(0)) continue;
        for (std::size_t e = 0; e < dh; ++e) O.data[i * d + off + e] += pj * V.data[j * d + off + e];
      }
    }
  }
  return t.record(
      std::move(O), {q, k, v},
      [q, k, v, n, d, dh, n_heads, s, drop, probs = std::move(probs),
       mask = std::move(mask)](Tape<Real>& tp, Var self) {
        const Tensor<Real>& dO = tp.grad(self);
        const Tensor<Real>& Q = tp.value(q);
        const Tensor<Real>& K = tp.value(k);
        const Tensor<Real>& V = tp.value(v);
        Tensor<Real>& dQ = tp.grad(q);
        Tensor<Real>& dK = tp.grad(k);
        Tensor<Real>& dV = tp.grad(v);
        std::vector<Real> dp(n);
        for (std::size_t h = 0; h < n_heads; ++h) {
          const std::size_t off = h * dh;
          for (std::size_t i = 0; i < n; ++i) {
            const Real* p = probs.data() + (h * n + i) * n;
            const Real* m = drop ? mask.data() + (h * n + i) * n : nullptr;
            Real dot_pp = 0;
            for (std::size_t j = 0; j < n; ++j) {
              Real g = 0;
              for (std::size_t e = 0; e < dh; ++e) g += dO.data[i * d + off + e] * V.data[j * d + off + e];
              const Real kept = m ? m[j] : Real(1);
              const Real pd = p[j] * kept;
              if (pd != Real(0))
                for (std::size_t e = 0; e < dh; ++e) dV.data[j * d + off + e] += pd * dO.data[i * d + off + e];
              dp[j] = g * kept;
              dot_pp += dp[j] * p[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const Real ds = p[j] * (dp[j] - dot_pp) * s;
              if (ds == Real(0)) continue;
              for (std::size_t e = 0; e < dh; ++e) {
                dQ.data[i * d + off + e] += ds * K.data[j * d + off + e];
                dK.data[j * d + off + e] += ds * Q.data[i * d + off + e];
              }
            }
          }
        }
      });
}

template <typename Real>
Var gather_rows(Tape<Real>& t, std::size_t param, const std::vector<std::size_t>& rows) {
  const Var table = t.param(param);
  const Tensor<Real>& T = t.value(table);
  require(T.rank() == 2, "gather_rows: table must be a matrix");
  const std::size_t d = T.shape[1];
  Tensor<Real> out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < T.shape[0], "gather_rows: row out of range");
    std::copy_n(T.ptr() + rows[i] * d, d, out.ptr() + i * d);
  }
  return t.record(std::move(out), {table}, [param, rows, d](Tape<Real>& tp, Var self) {
    const Tensor<Real>& g = tp.grad(self);
    for (std::size_t i = 0; i < rows.size(); ++i)
      tp.add_sparse_row(param, rows[i], g.ptr() + i * d, d);
  });
}

template <typename Real>
Var attention_pool(Tape<Real>& t, Var v, Var w) {
  const Tensor<Real>& Vt = t.value(v);
  const Tensor<Real>& W = t.value(w);
  require(Vt.rank() == 2 && Vt.shape[0] >= 1, "attention_pool: needs at least one vector");
  const std::size_t s = Vt.shape[0], d = Vt.shape[1];
  require(W.size() == d, "attention_pool: score vector " + shape_str(W.shape) +
                             " vs width " + std::to_string(d));
  std::vector<Real> p(s);
  Real mx = -std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < s; ++i) {
    Real a = 0;
    for (std::size_t e = 0; e < d; ++e) a += Vt.data[i * d + e] * W.data[e];
    p[i] = a;
    mx = std::max(mx, a);
  }
  Real z = 0;
  for (Real& x : p) {
    x = std::exp(x - mx);
    z += x;
  }
  for (Real& x : p) x /= z;
  Tensor<Real> out({1, d});
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t e = 0; e < d; ++e) out.data[e] += p[i] * Vt.data[i * d + e];
  return t.record(std::move(out), {v, w}, [v, w, s, d, p = std::move(p)](Tape<Real>& tp, Var self) {
    const Tensor<Real>& g = tp.grad(self);
    const Tensor<Real>& Vt = tp.value(v);
    const Tensor<Real>& W = tp.value(w);
    std::vector<Real> dp(s);
    Real mean = 0;
    for (std::size_t i = 0; i < s; ++i) {
      Real a = 0;
      for (std::size_t e = 0; e < d; ++e) a += g.data[e] * Vt.data[i * d + e];
      dp[i] = a;
      mean += p[i] * a;
    }
    const bool dv = tp.needs_grad(v), dw = tp.needs_grad(w);
    for (std::size_t i = 0; i < s; ++i) {
      const Real da = p[i] * (dp[i] - mean);
      if (dv) {
        Tensor<Real>& gv = tp.grad(v);
        for (std::size_t e = 0; e < d; ++e) gv.data[i * d + e] += p[i] * g.data[e] + da * W.data[e];
      }
      if (dw) {
        Tensor<Real>& gw = tp.grad(w);
        for (std::size_t e = 0; e < d; ++e) gw.data[e] += da * Vt.data[i * d + e];
      }
    }
  });
}

template <typename Real>
Var concat_rows(Tape<Real>& t, Var a, Var b) {
  const Tensor<Real>& A = t.value(a);
  const Tensor<Real>& B = t.value(b);
  require(A.rank() == 2 && B.rank() == 2 && A.shape[1] == B.shape[1],
          "concat_rows: " + shape_str(A.shape) + " over " + shape_str(B.shape));
  Tensor<Real> C({A.shape[0] + B.shape[0], A.shape[1]});
  std::copy(A.data.begin(), A.data.end(), C.data.begin());
  std::copy(B.data.begin(), B.data.end(), C.data.begin() + A.size());
  const std::size_t split = A.size();
  return t.record(std::move(C), {a, b}, [a, b, split](Tape<Real>& tp, Var self) {
    const Tensor<Real>& g = tp.grad(self);
    if (tp.needs_grad(a)) {
      Tensor<Real>& ga = tp.grad(a);
      for (std::size_t i = 0; i < split; ++i) ga.data[i] += g.data[i];
    }
    if (tp.needs_grad(b)) {
      Tensor<Real>& gb = tp.grad(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += g.data[split + i];
    }
  });
}

template <typename Real>
Var concat_rows(Tape<Real>& t, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: nothing to stack");
  const std::size_t d = t.value(parts.front()).shape.at(1);
  std::size_t rows = 0;
  for (Var p : parts) {
    const Tensor<Real>& P = t.value(p);
    require(P.rank() == 2 && P.shape[1] == d, "concat_rows: width mismatch " + shape_str(P.shape));
    rows += P.shape[0];
  }
  Tensor<Real> C({rows, d});
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor<Real>& P = t.value(p);
    std::copy(P.data.begin(), P.data.end(), C.data.begin() + off);
    off += P.size();
  }
  return t.record(std::move(C), parts, [parts](Tape<Real>& tp, Var self) {
    const Tensor<Real>& g = tp.grad(self);
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t n = tp.value(p).size();
      if (tp.needs_grad(p)) {
        Tensor<Real>& gp = tp.grad(p);
        for (std::size_t i = 0; i < n; ++i) gp.data[i] += g.data[off + i];
      }
      off += n;
    }
  });
}

template <typename Real>
Var reshape(Tape<Real>& t, Var x, Shape shape) {
  const Tensor<Real>& X = t.value(x);
  require(shape_size(shape) == X.size(),
          "reshape: " + shape_str(X.shape) + " -> " + shape_str(shape));
  Tensor<Real> Y(std::move(shape), X.data);
  return t.record(std::move(Y), {x}, [x](Tape<Real>& tp, Var self) {
    add_into(tp.grad(x), tp.grad(self));
  });
}

template <typename Real>
Var biaffine(Tape<Real>& t, Var x, Var y, Var u, Var w, Var b) {
  const Tensor<Real>& X = t.value(x);
  const Tensor<Real>& Y = t.value(y);
  const Tensor<Real>& U = t.value(u);
  const Tensor<Real>& W = t.value(w);
  const Tensor<Real>& B = t.value(b);
  require(X.rank() == 2 && Y.rank() == 2 && U.rank() == 3,
          "biaffine: x " + shape_str(X.shape) + " y " + shape_str(Y.shape) + " U " +
              shape_str(U.shape));
  const std::size_t n = X.shape[0], d1 = X.shape[1];
  const std::size_t m = Y.shape[0], d2 = Y.shape[1];
  const std::size_t k = U.shape[1];
  require(U.shape[0] == d1 && U.shape[2] == d2,
          "biaffine: U " + shape_str(U.shape) + " vs inputs of width " +
              std::to_string(d1) + "/" + std::to_string(d2));
  require(W.rank() == 2 && W.shape[0] == d1 + d2 && W.shape[1] == k,
          "biaffine: W " + shape_str(W.shape));
  require(B.size() == k, "biaffine: b " + shape_str(B.shape));

  // xu (n, k*d2), seen as (n*k, d2) rows indexed by (i, c).
  std::vector<Real> xu(n * k * d2, Real(0));
  kernels::gemm_nn(X.ptr(), U.ptr(), xu.data(), n, d1, k * d2);
  std::vector<Real> z(n * k * m, Real(0));
  kernels::gemm_nt(xu.data(), Y.ptr(), z.data(), n * k, d2, m);
  std::vector<Real> xw(n * k, Real(0)), yw(m * k, Real(0));
  kernels::gemm_nn(X.ptr(), W.ptr(), xw.data(), n, d1, k);
  kernels::gemm_nn(Y.ptr(), W.ptr() + d1 * k, yw.data(), m, d2, k);

  Tensor<Real> S({n, m, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < k; ++c)
        S.data[(i * m + j) * k + c] = z[(i * k + c) * m + j] + xw[i * k + c] + yw[j * k + c] + B.data[c];

  return t.record(
      std::move(S), {x, y, u, w, b},
      [x, y, u, w, b, n, m, d1, d2, k, xu = std::move(xu)](Tape<Real>& tp, Var self) {
        const Tensor<Real>& dS = tp.grad(self);
        const Tensor<Real>& X = tp.value(x);
        const Tensor<Real>& Y = tp.value(y);
        const Tensor<Real>& U = tp.value(u);
        const Tensor<Real>& W = tp.value(w);
        std::vector<Real> dz(n * k * m);
        std::vector<Real> dxw(n * k, Real(0)), dyw(m * k, Real(0));
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j)
            for (std::size_t c = 0; c < k; ++c) {
              const Real g = dS.data[(i * m + j) * k + c];
              dz[(i * k + c) * m + j] = g;
              dxw[i * k + c] += g;
              dyw[j * k + c] += g;
            }
        if (tp.needs_grad(b)) {
          Tensor<Real>& db = tp.grad(b);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c) db.data[c] += dxw[i * k + c];
        }
        if (tp.needs_grad(w)) {
          Tensor<Real>& dW = tp.grad(w);
          kernels::gemm_tn(X.ptr(), dxw.data(), dW.ptr(), d1, n, k);
          kernels::gemm_tn(Y.ptr(), dyw.data(), dW.ptr() + d1 * k, d2, m, k);
        }
        if (tp.needs_grad(y)) {
          Tensor<Real>& dY = tp.grad(y);
          kernels::gemm_tn(dz.data(), xu.data(), dY.ptr(), m, n * k, d2);
          kernels::gemm_nt(dyw.data(), W.ptr() + d1 * k, dY.ptr(), m, k, d2);
        }
        if (tp.needs_grad(x) || tp.needs_grad(u)) {
          std::vector<Real> dxu(n * k * d2, Real(0));
          kernels::gemm_nn(dz.data(), Y.ptr(), dxu.data(), n * k, m, d2);
          if (tp.needs_grad(x)) {
            Tensor<Real>& dX = tp.grad(x);
            kernels::gemm_nt(dxu.data(), U.ptr(), dX.ptr(), n, k * d2, d1);
            kernels::gemm_nt(dxw.data(), W.ptr(), dX.ptr(), n, k, d1);
          }
          if (tp.needs_grad(u))
            kernels::gemm_tn(X.ptr(), dxu.data(), tp.grad(u).ptr(), d1, n, k * d2);
        }
      });
}

template <typename Real>
Var sum(Tape<Real>& t, Var x) {
  Real s = 0;
  for (Real v : t.value(x).data) s += v;
  return t.record(Tensor<Real>({1}, s), {x}, [x](Tape<Real>& tp, Var self) {
    const Real g = tp.grad(self).data[0];
    for (Real& v : tp.grad(x).data) v += g;
  });
}

template <typename Real>
Var bce_with_logits(Tape<Real>& t, Var logits, const Tensor<Real>& targets,
                    const Tensor<Real>& mask) {
  const Tensor<Real>& Z = t.value(logits);
  require(targets.size() == Z.size() && mask.size() == Z.size(),
          "bce_with_logits: logits " + shape_str(Z.shape) + " targets " +
              shape_str(targets.shape) + " mask " + shape_str(mask.shape));
  std::size_t count = 0;
  Real total = 0;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    if (mask.data[i] == Real(0)) continue;
    ++count;
    total += bce_value(Z.data[i], targets.data[i]);
  }
  const Real norm = count ? Real(1) / static_cast<Real>(count) : Real(0);
  return t.record(Tensor<Real>({1}, total * norm), {logits},
                  [logits, targets, mask, norm](Tape<Real>& tp, Var self) {
                    const Real g = tp.grad(self).data[0] * norm;
                    if (g == Real(0)) return;
                    const Tensor<Real>& Z = tp.value(logits);
                    Tensor<Real>& dz = tp.grad(logits);
                    for (std::size_t i = 0; i < Z.size(); ++i) {
                      if (mask.data[i] == Real(0)) continue;
                      dz.data[i] += g * (sigmoid(Z.data[i]) - targets.data[i]);
                    }
                  });
}

template <typename Real>
Var softmax_ce(Tape<Real>& t, Var logits,
               const std::vector<std::pair<std::size_t, std::size_t>>& targets) {
  const Tensor<Real>& Z = t.value(logits);
  require(Z.rank() == 2, "softmax_ce: logits must be (rows, labels)");
  const std::size_t L = Z.shape[1];
  Real total = 0;
  for (const auto& [r, c] : targets) {
    require(r < Z.shape[0] && c < L, "softmax_ce: target out of range");
    const Real* row = Z.ptr() + r * L;
    const Real mx = *std::max_element(row, row + L);
    Real z = 0;
    for (std::size_t j = 0; j < L; ++j) z += std::exp(row[j] - mx);
    total += mx + std::log(z) - row[c];
  }
  const Real norm = targets.empty() ? Real(0) : Real(1) / static_cast<Real>(targets.size());
  return t.record(Tensor<Real>({1}, total * norm), {logits},
                  [logits, targets, norm, L](Tape<Real>& tp, Var self) {
                    const Real g = tp.grad(self).data[0] * norm;
                    if (g == Real(0)) return;
                    const Tensor<Real>& Z = tp.value(logits);
                    Tensor<Real>& dz = tp.grad(logits);
                    for (const auto& [r, c] : targets) {
                      const Real* row = Z.ptr() + r * L;
                      const Real mx = *std::max_element(row, row + L);
                      Real z = 0;
                      for (std::size_t j = 0; j < L; ++j) z += std::exp(row[j] - mx);
                      for (std::size_t j = 0; j < L; ++j)
                        dz.data[r * L + j] += g * std::exp(row[j] - mx) / z;
                      dz.data[r * L + c] -= g;
                    }
                  });
}

template <typename Real>
Var weighted_sum(Tape<Real>& t, const std::vector<Var>& scalars,
                 const std::vector<Real>& weights) {
  require(scalars.size() == weights.size() && !scalars.empty(),
          "weighted_sum: mismatched inputs");
  Real total = 0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(t.value(scalars[i]).size() == 1, "weighted_sum: inputs must be scalars");
    total += weights[i] * t.value(scalars[i]).data[0];
  }
  return t.record(Tensor<Real>({1}, total), scalars,
                  [scalars, weights](Tape<Real>& tp, Var self) {
                    const Real g = tp.grad(self).data[0];
                    for (std::size_t i = 0; i < scalars.size(); ++i)
                      if (tp.needs_grad(scalars[i])) tp.grad(scalars[i]).data[0] += weights[i] * g;
                  });
}

#define EVGRAPH_INSTANTIATE(Real)                                                       \
  template Real sigmoid<Real>(Real);                                                    \
  template Real bce_value<Real>(Real, Real);                                            \
  template Var matmul<Real>(Tape<Real>&, Var, Var);                                     \
  template Var linear<Real>(Tape<Real>&, Var, Var, Var);                                \
  template Var add<Real>(Tape<Real>&, Var, Var);                                        \
  template Var scale<Real>(Tape<Real>&, Var, Real);                                     \
  template Var gelu<Real>(Tape<Real>&, Var);                                            \
  template Var layer_norm<Real>(Tape<Real>&, Var, Var, Var, Real);                      \
  template Var dropout<Real>(Tape<Real>&, Var, double, const DropoutContext&,           \
                             std::uint64_t);                                            \
  template Var multi_head_attention<Real>(Tape<Real>&, Var, Var, Var, std::size_t,      \
                                          double, const DropoutContext&, std::uint64_t); \
  template Var gather_rows<Real>(Tape<Real>&, std::size_t,                              \
                                 const std::vector<std::size_t>&);                      \
  template Var attention_pool<Real>(Tape<Real>&, Var, Var);                             \
  template Var concat_rows<Real>(Tape<Real>&, Var, Var);                                \
  template Var concat_rows<Real>(Tape<Real>&, const std::vector<Var>&);                \
  template Var reshape<Real>(Tape<Real>&, Var, Shape);                                  \
  template Var biaffine<Real>(Tape<Real>&, Var, Var, Var, Var, Var);                    \
  template Var sum<Real>(Tape<Real>&, Var);                                             \
  template Var bce_with_logits<Real>(Tape<Real>&, Var, const Tensor<Real>&,             \
                                     const Tensor<Real>&);                              \
  template Var softmax_ce<Real>(                                                        \
      Tape<Real>&, Var, const std::vector<std::pair<std::size_t, std::size_t>>&);       \
  template Var weighted_sum<Real>(Tape<Real>&, const std::vector<Var>&,                 \
                                  const std::vector<Real>&);

EVGRAPH_INSTANTIATE(float)
EVGRAPH_INSTANTIATE(double)

#undef EVGRAPH_INSTANTIATE

}  // namespace evgraph::ops
