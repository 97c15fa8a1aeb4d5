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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "evgraph/checkpoint.hpp"
#include "evgraph/kernels.hpp"
#include "evgraph/matching.hpp"
#include "evgraph/ops.hpp"
#include "evgraph/optim.hpp"
#include "evgraph/transformer.hpp"
#include "support/fixtures.hpp"

using namespace evgraph;
using namespace evgraph::testing;

namespace {

template <typename Real>
std::vector<Real> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::vector<Real> v(n);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return v;
}

template <typename Real>
void check_gemms(std::mt19937_64& rng, std::size_t n, std::size_t k, std::size_t m) {
  const auto a = random_vec<Real>(n * k, rng), b_nn = random_vec<Real>(k * m, rng),
             b_nt = random_vec<Real>(m * k, rng), a_tn = random_vec<Real>(k * n, rng);
  const auto c0 = random_vec<Real>(n * m, rng);
  auto same = [](const std::vector<Real>& x, const std::vector<Real>& y) {
    return std::memcmp(x.data(), y.data(), x.size() * sizeof(Real)) == 0;
  };
  std::vector<Real> p = c0, s = c0;
  kernels::gemm_nn(a.data(), b_nn.data(), p.data(), n, k, m);
  kernels::serial::gemm_nn(a.data(), b_nn.data(), s.data(), n, k, m);
  REQUIRE(same(p, s));
  p = s = c0;
  kernels::gemm_nt(a.data(), b_nt.data(), p.data(), n, k, m);
  kernels::serial::gemm_nt(a.data(), b_nt.data(), s.data(), n, k, m);
  REQUIRE(same(p, s));
  p = s = c0;
  kernels::gemm_tn(a_tn.data(), b_nn.data(), p.data(), n, k, m);
  kernels::serial::gemm_tn(a_tn.data(), b_nn.data(), s.data(), n, k, m);
  REQUIRE(same(p, s));
}

Tensor<double> mat(Shape s, std::vector<double> v) { return Tensor<double>(std::move(s), std::move(v)); }

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

Tensor<double> permute_rows(const Tensor<double>& x, const std::vector<std::size_t>& perm) {
  Tensor<double> y(x.shape);
  const std::size_t d = x.shape[1];
  for (std::size_t i = 0; i < perm.size(); ++i)
    std::copy_n(x.ptr() + perm[i] * d, d, y.ptr() + i * d);
  return y;
}

}  // namespace

TEST_CASE("parallel GEMM kernels are bit-identical to the serial reference") {
  const int saved = kernels::max_threads();
  kernels::set_max_threads(4);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 70, k = 1 + rng() % 70, m = 1 + rng() % 70;
    check_gemms<float>(rng, n, k, m);
    check_gemms<double>(rng, n, k, m);
  }
  check_gemms<float>(rng, 128, 96, 160);
  check_gemms<float>(rng, 1, 300, 1);
  kernels::set_max_threads(saved);
}

TEST_CASE("serial GEMM against a direct triple loop") {
  std::mt19937_64 rng(2);
  const std::size_t n = 5, k = 7, m = 3;
  const auto a = random_vec<double>(n * k, rng), b = random_vec<double>(k * m, rng);
  std::vector<double> c(n * m, 0.0);
  kernels::serial::gemm_nn(a.data(), b.data(), c.data(), n, k, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
      CHECK(c[i * m + j] == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("linear by hand") {
  Tape<double> t;
  const Var y = ops::linear(t, t.constant(mat({1, 2}, {1, 2})), t.constant(mat({2, 2}, {1, 0, 0, 2})),
                            t.constant(mat({2}, {1, 1})));
  CHECK(t.value(y).data == std::vector<double>{2, 5});

  std::mt19937_64 rng(4);
  const Tensor<double> x = random_tensor({3, 4}, rng);
  Tensor<double> eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1;
  const Var same = ops::linear(t, t.constant(x), t.constant(eye), t.constant(Tensor<double>({4})));
  CHECK(t.value(same) == x);
  CHECK_THROWS_AS(ops::linear(t, t.constant(x), t.constant(Tensor<double>({3, 4})),
                              t.constant(Tensor<double>({4}))),
                  ShapeError);
}

TEST_CASE("biaffine by hand") {
  Tape<double> t;
  const Var s = ops::biaffine(t, t.constant(mat({1, 1}, {3})), t.constant(mat({1, 1}, {4})),
                              t.constant(mat({1, 1, 1}, {2})), t.constant(mat({2, 1}, {1, 1})),
                              t.constant(mat({1}, {0})));
  CHECK(t.value(s).data == std::vector<double>{31});

  std::mt19937_64 rng(5);
  const Var z = ops::biaffine(t, t.constant(random_tensor({2, 3}, rng)),
                              t.constant(random_tensor({4, 3}, rng)),
                              t.constant(Tensor<double>({3, 5, 3})), t.constant(Tensor<double>({6, 5})),
                              t.constant(Tensor<double>({5})));
  CHECK(t.shape(z) == Shape{2, 4, 5});
  for (double v : t.value(z).data) CHECK(v == 0.0);

  // Full definition against an independent loop.
  const Tensor<double> x = random_tensor({2, 3}, rng), y = random_tensor({4, 2}, rng),
                       u = random_tensor({3, 2, 2}, rng), w = random_tensor({5, 2}, rng),
                       b = random_tensor({2}, rng);
  const Var r = ops::biaffine(t, t.constant(x), t.constant(y), t.constant(u), t.constant(w),
                              t.constant(b));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t c = 0; c < 2; ++c) {
        double e = b.data[c];
        for (std::size_t p = 0; p < 3; ++p)
          for (std::size_t q = 0; q < 2; ++q)
            e += x.at(i, p) * u.data[(p * 2 + c) * 2 + q] * y.at(j, q);
        for (std::size_t p = 0; p < 3; ++p) e += w.data[p * 2 + c] * x.at(i, p);
        for (std::size_t q = 0; q < 2; ++q) e += w.data[(3 + q) * 2 + c] * y.at(j, q);
        CHECK(t.value(r).data[(i * 4 + j) * 2 + c] == doctest::Approx(e).epsilon(1e-12));
      }
}

TEST_CASE("loss closed forms") {
  Tape<double> t;
  const Tensor<double> one({1}, 1.0);
  const Var b = ops::bce_with_logits(t, t.constant(Tensor<double>({1}, 0.0)), one, one);
  CHECK(t.value(b).data[0] == doctest::Approx(std::log(2.0)));
  const Var c = ops::softmax_ce(t, t.constant(Tensor<double>({1, 2})), {{0, 0}});
  CHECK(t.value(c).data[0] == doctest::Approx(std::log(2.0)));

  const Var sat = ops::bce_with_logits(t, t.constant(Tensor<double>({1}, 20.0)), one, one);
  CHECK(t.value(sat).data[0] < 1e-8);
  const Var sat_ce = ops::softmax_ce(t, t.constant(mat({1, 3}, {20, -20, -20})), {{0, 0}});
  CHECK(t.value(sat_ce).data[0] < 1e-8);
  Tape<float> tf;
  const Var huge = ops::bce_with_logits(tf, tf.constant(Tensor<float>({1}, -500.0f)),
                                        Tensor<float>({1}, 1.0f), Tensor<float>({1}, 1.0f));
  CHECK(tf.value(huge).data[0] == doctest::Approx(500.0f));

  const Var empty = ops::bce_with_logits(t, t.constant(Tensor<double>({3}, 2.0)),
                                         Tensor<double>({3}), Tensor<double>({3}));
  CHECK(t.value(empty).data[0] == 0.0);
  CHECK(t.value(ops::softmax_ce(t, t.constant(Tensor<double>({2, 2})), {})).data[0] == 0.0);

  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const Tensor<double> z = random_tensor({4, 3}, rng, 10.0);
    Tensor<double> target({4, 3}), mask({4, 3}, 1.0);
    for (auto& v : target.data) v = static_cast<double>(rng() % 2);
    CHECK(t.value(ops::bce_with_logits(t, t.constant(z), target, mask)).data[0] >= 0.0);
    CHECK(t.value(ops::softmax_ce(t, t.constant(z), {{0, rng() % 3}, {2, rng() % 3}})).data[0] >= 0.0);
  }
}

TEST_CASE("attention weights form a distribution") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Tape<double> t;
    const std::size_t rows = 1 + rng() % 6;
    const Var q = t.constant(random_tensor({rows, 8}, rng, 5.0));
    const Var k = t.constant(random_tensor({rows, 8}, rng, 5.0));
    const Var v = t.constant(Tensor<double>({rows, 8}, 1.0));
    const Var out = ops::multi_head_attention(t, q, k, v, 4, 0.0, ops::DropoutContext{}, 0);
    for (double x : t.value(out).data) CHECK(std::abs(x - 1.0) < 1e-6);
  }
}

TEST_CASE("dropout is keyed and scaled") {
  Tape<double> t;
  const Var x = t.constant(Tensor<double>({100, 100}, 1.0));
  CHECK(ops::dropout(t, x, 0.3, ops::DropoutContext{}, 1).id == x.id);
  const ops::DropoutContext ctx{true, 9, 3, 1};
  const Var a = ops::dropout(t, x, 0.3, ctx, 1);
  const Var b = ops::dropout(t, x, 0.3, ctx, 1);
  CHECK(t.value(a) == t.value(b));
  CHECK_FALSE(t.value(a) == t.value(ops::dropout(t, x, 0.3, ops::DropoutContext{true, 9, 4, 1}, 1)));
  CHECK_FALSE(t.value(a) == t.value(ops::dropout(t, x, 0.3, ctx, 2)));
  std::size_t kept = 0;
  for (double v : t.value(a).data) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.7) < 1e-12));
    kept += v != 0.0;
  }
  CHECK(std::abs(static_cast<double>(kept) / 1e4 - 0.7) < 0.02);
}

TEST_CASE("attention pool") {
  Tape<double> t;
  std::mt19937_64 rng(8);
  const Tensor<double> v = random_tensor({1, 5}, rng);
  const Var single = ops::attention_pool(t, t.constant(v), t.constant(random_tensor({5}, rng, 3.0)));
  CHECK(t.value(single).data == v.data);
  Tensor<double> twice({2, 5});
  std::copy(v.data.begin(), v.data.end(), twice.data.begin());
  std::copy(v.data.begin(), v.data.end(), twice.data.begin() + 5);
  const Var same = ops::attention_pool(t, t.constant(twice), t.constant(random_tensor({5}, rng, 3.0)));
  for (std::size_t e = 0; e < 5; ++e) CHECK(t.value(same).data[e] == doctest::Approx(v.data[e]));
  const Tensor<double> two = random_tensor({2, 5}, rng);
  const Var mean = ops::attention_pool(t, t.constant(two), t.constant(Tensor<double>({5})));
  for (std::size_t e = 0; e < 5; ++e)
    CHECK(t.value(mean).data[e] == doctest::Approx(0.5 * (two.at(0, e) + two.at(1, e))));
  CHECK_THROWS_AS(ops::attention_pool(t, t.constant(Tensor<double>({0, 5})), t.constant(Tensor<double>({5}))),
                  ShapeError);
}

TEST_CASE("self-attention block with zero projections is the identity") {
  std::mt19937_64 rng(9);
  ParamStore<double> store;
  const BlockParams p = register_block(store, "b", 8, 0, rng);
  for (auto& prm : store)
    if (prm.name.find(".w_") != std::string::npos) prm.value.fill(0.0);
  Tape<double> t(&store);
  const Tensor<double> x = random_tensor({5, 8}, rng);
  const Var y = self_attention_block(t, t.constant(x), p, false, BlockOptions{}, ops::DropoutContext{}, 0);
  CHECK(t.value(y) == x);
  const Var with_pe = self_attention_block(t, t.constant(x), p, true, BlockOptions{}, ops::DropoutContext{}, 0);
  const Tensor<double> pe = positional_encoding<double>(5, 8);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(t.value(with_pe).data[i] == doctest::Approx(x.data[i] + pe.data[i]));
}

TEST_CASE("self-attention block is permutation equivariant without positions") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    ParamStore<double> store;
    const BlockParams p = register_block(store, "b", 8, 0, rng);
    for (auto& prm : store)
      if (prm.name.find("bias") != std::string::npos || prm.name.find(".b_") != std::string::npos)
        init_uniform(prm.value, 0.5, rng);
    const std::size_t rows = 2 + rng() % 6;
    const Tensor<double> x = random_tensor({rows, 8}, rng);
    const auto perm = random_permutation(rows, rng);
    Tape<double> t(&store);
    const Var y = self_attention_block(t, t.constant(x), p, false, BlockOptions{}, ops::DropoutContext{}, 0);
    const Var yp = self_attention_block(t, t.constant(permute_rows(x, perm)), p, false, BlockOptions{},
                                        ops::DropoutContext{}, 0);
    const Tensor<double> expect = permute_rows(t.value(y), perm);
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(std::abs(expect.data[i] - t.value(yp).data[i]) < 1e-5);
  }
}

TEST_CASE("adamw one step") {
  auto one_param = [](double value) {
    ParamStore<double> s;
    s.add("w", Tensor<double>({1}, value), 0);
    return s;
  };
  SUBCASE("bias-corrected first step moves by about lr") {
    ParamStore<double> s = one_param(1.0);
    auto state = make_optim_state(s, {AdamWHyper{0.1, 0.9, 0.98, 1e-8, 0.0}});
    adamw_step(s, {Tensor<double>({1}, 1.0)}, state);
    CHECK(s[0].value.data[0] == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(state.step == 1);
  }
  SUBCASE("decoupled weight decay") {
    ParamStore<double> s = one_param(1.0);
    auto state = make_optim_state(s, {AdamWHyper{0.1, 0.9, 0.98, 1e-8, 0.1}});
    adamw_step(s, {Tensor<double>({1}, 0.0)}, state);
    CHECK(s[0].value.data[0] == doctest::Approx(0.99).epsilon(1e-12));
  }
  SUBCASE("zero gradient and no decay leaves parameters unchanged") {
    ParamStore<double> s = one_param(0.37);
    auto state = make_optim_state(s, {AdamWHyper{0.1, 0.9, 0.98, 1e-8, 0.0}});
    for (int i = 0; i < 5; ++i) adamw_step(s, {Tensor<double>({1}, 0.0)}, state);
    CHECK(s[0].value.data[0] == 0.37);
  }
  SUBCASE("two steps against a hand recurrence") {
    ParamStore<double> s = one_param(0.5);
    const AdamWHyper h{0.01, 0.9, 0.98, 1e-8, 0.05};
    auto state = make_optim_state(s, {h});
    double w = 0.5, m = 0, v = 0;
    for (int step = 1; step <= 2; ++step) {
      const double g = step == 1 ? 0.3 : -0.7;
      adamw_step(s, {Tensor<double>({1}, g)}, state);
      m = 0.9 * m + 0.1 * g;
      v = 0.98 * v + 0.02 * g * g;
      const double mh = m / (1 - std::pow(0.9, step)), vh = v / (1 - std::pow(0.98, step));
      w = w * (1 - 0.01 * 0.05) - 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(s[0].value.data[0] == doctest::Approx(w).epsilon(1e-12));
  }
  SUBCASE("errors") {
    ParamStore<double> s = one_param(1.0);
    auto state = make_optim_state(s, {AdamWHyper{}});
    CHECK_THROWS_AS(adamw_step(s, {}, state), ShapeError);
    CHECK_THROWS_AS(adamw_step(s, {Tensor<double>({2})}, state), ShapeError);
    s.add("other", Tensor<double>({1}), 3);
    CHECK_THROWS_AS(make_optim_state(s, {AdamWHyper{}}), ConfigError);
  }
  CHECK(AdamWHyper{}.beta2 == 0.98);
}

TEST_CASE("warmup and cosine schedule") {
  CHECK(lr_at_step(0, 1000, 5000, 1e-4) == 0.0);
  CHECK(lr_at_step(1000, 1000, 5000, 1e-4) == 1e-4);
  CHECK(std::abs(lr_at_step(5000, 1000, 5000, 1e-4)) < 1e-12);
  CHECK(lr_at_step(500, 1000, 5000, 1e-4) == doctest::Approx(5e-5));
  CHECK(lr_at_step(3000, 1000, 5000, 1e-4) == doctest::Approx(5e-5));
  CHECK(std::abs(lr_at_step(999, 1000, 5000, 1.0) - lr_at_step(1001, 1000, 5000, 1.0)) < 2e-3);
  double prev = 1.0;
  for (int s = 1000; s <= 5000; s += 100) {
    const double lr = lr_at_step(s, 1000, 5000, 1.0);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK(lr_at_step(0, 0, 10, 1.0) == 1.0);
  CHECK_THROWS_AS(lr_at_step(11, 0, 10, 1.0), ConfigError);
  CHECK_THROWS_AS(lr_at_step(-1, 0, 10, 1.0), ConfigError);
  CHECK_THROWS_AS(lr_at_step(0, 10, 10, 1.0), ConfigError);
}

TEST_CASE("checkpoint round trip and corruption") {
  const auto dir = std::filesystem::temp_directory_path() / "evgraph_test_ckpt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.ckpt";
  std::mt19937_64 rng(11);
  ParamStore<float> store;
  store.add("a.w", random_tensor({3, 4}, rng).cast<float>(), 0);
  store.add("b", random_tensor({5}, rng).cast<float>(), 1);
  const nlohmann::ordered_json config = {{"d_model", 64}, {"name", "x"}};
  save_checkpoint(path, config, {{"epoch", 3}}, store);

  const Checkpoint ck = load_checkpoint(path);
  CHECK(ck.config == config);
  CHECK(ck.meta.at("epoch") == 3);
  REQUIRE(ck.params.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(ck.params[i].name == store[i].name);
    CHECK(ck.params[i].group == store[i].group);
    CHECK(ck.params[i].value == store[i].value);
  }

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  CHECK(bytes.substr(0, 4) == "EVG1");
  auto write = [&](const std::string& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << b;
  };
  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  write(bytes + "xx");
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  std::string bad_magic = bytes;
  bad_magic[3] = '2';
  write(bad_magic);
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  std::string edited = bytes;
  edited.replace(edited.find("64"), 2, "65");
  write(edited);
  try {
    (void)load_checkpoint(path);
    FAIL("expected a CheckpointError");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("hash") != std::string::npos);
  }
  write(bytes.substr(0, 10));
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
  CHECK(config_hash(config) == config_hash(config));
  CHECK(config_hash(config) != config_hash({{"d_model", 65}, {"name", "x"}}));
  std::filesystem::remove_all(dir);
}

TEST_CASE("hungarian matching") {
  const Assignment a = hungarian({{1, 2}, {2, 1}});
  CHECK(a.column_of_row == std::vector<std::size_t>{0, 1});
  CHECK(a.total_cost == 2.0);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6, m = n + rng() % (13 - n);
    std::vector<std::vector<double>> cost(n, std::vector<double>(m));
    for (auto& row : cost)
      for (auto& c : row) c = trial % 3 == 0 ? std::floor(u(rng) / 3) : u(rng);
    const Assignment got = hungarian(cost);
    std::set<std::size_t> cols(got.column_of_row.begin(), got.column_of_row.end());
    REQUIRE(cols.size() == n);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i][got.column_of_row[i]];
    CHECK(total == doctest::Approx(got.total_cost));
    CHECK(total == doctest::Approx(brute_force_assignment(cost)).epsilon(1e-12));
  }
  CHECK(hungarian({}).column_of_row.empty());
  CHECK_THROWS_AS(hungarian({{1}, {2}}), CapacityError);
  CHECK_THROWS_AS(hungarian({{1, 2}, {3}}), ShapeError);
}
