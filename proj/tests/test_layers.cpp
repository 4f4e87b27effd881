// tests/test_layers.cpp

// Copyright 2026  The xane Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "gradcheck.hpp"
#include "xane/nn/adam.hpp"
#include "xane/nn/checkpoint.hpp"
#include "xane/nn/encoder.hpp"
#include "xane/nn/layers.hpp"
#include "xane/nn/loss.hpp"

using namespace xane;
using namespace xane::nn;
using namespace xane::testing;
using Catch::Approx;

using M = Matrix<double>;

TEST_CASE("linear forward examples", "[nn][linear]") {
  Linear<double> lin("l", 2, 1);
  lin.weight.value = {1.0, 1.0};
  lin.bias.value = {0.5};
  M x(1, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  REQUIRE(lin.forward(x)(0, 0) == 3.5);

  Linear<double> id("id", 3, 3);
  id.weight.value = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::mt19937_64 rng(1);
  const M r = random_matrix(4, 3, rng);
  REQUIRE(id.forward(r).data() == r.data());
  REQUIRE_THROWS(lin.forward(r));
}

TEST_CASE("conv1d frame counts and identity", "[nn][conv]") {
  std::mt19937_64 rng(2);
  Conv1d<double> a("a", 80, 16, 2, 2), b("b", 16, 16, 2, 2);
  const M x = random_matrix(100, 80, rng);
  REQUIRE(b.forward(a.forward(x)).rows() == 25);
  Conv1d<double> c("c", 768, 8, 2, 2), d("d", 8, 8, 2, 1);
  REQUIRE(d.forward(c.forward(random_matrix(50, 768, rng))).rows() == 25);
  Conv1d<double> k3("k3", 4, 4, 3, 2);
  REQUIRE(k3.forward(random_matrix(100, 4, rng)).rows() == 50);

  Conv1d<double> id("id", 3, 3, 1, 1);
  id.weight.value = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const M y = random_matrix(7, 3, rng);
  REQUIRE(id.forward(y).data() == y.data());
  REQUIRE_THROWS(id.forward(random_matrix(7, 4, rng)));
}

TEST_CASE("layer_norm examples", "[nn][layernorm]") {
  LayerNorm<double> ln("ln", 2);
  M x(1, 2);
  x(0, 0) = 0.0;
  x(0, 1) = 2.0;
  const M y = ln.forward(x);
  REQUIRE(y(0, 0) == Approx(-1.0).epsilon(1e-5));
  REQUIRE(y(0, 1) == Approx(1.0).epsilon(1e-5));
  x(0, 0) = x(0, 1) = 3.0;
  REQUIRE(ln.forward(x)(0, 0) == 0.0);
  ln.gain.value = {0.0, 0.0};
  ln.bias.value = {0.25, -0.5};
  x(0, 0) = 7.0;
  const M z = ln.forward(x);
  REQUIRE(z(0, 0) == 0.25);
  REQUIRE(z(0, 1) == -0.5);
}

TEST_CASE("gelu values", "[nn][gelu]") {
  REQUIRE(gelu(0.0) == 0.0);
  REQUIRE(gelu(3.0) == Approx(2.9960).margin(1e-4));
  for (double x : {0.1, 0.7, 1.9, 4.2}) REQUIRE(gelu(x) - gelu(-x) == Approx(x).margin(1e-12));
}

TEST_CASE("softmax cross entropy and masked mse", "[nn][loss]") {
  const std::vector<double> uniform{0.3, 0.3, 0.3};
  REQUIRE(softmax_ce(uniform, 1).loss == Approx(std::log(3.0)).epsilon(1e-12));
  const std::vector<double> sat{0.0, 20.0, 0.0};
  REQUIRE(softmax_ce(sat, 1).loss < 1e-8);
  const std::vector<double> two{1.0, 0.0};
  REQUIRE(softmax_ce(two, 1).loss == Approx(std::log(1.0 + std::exp(1.0))).epsilon(1e-12));
  REQUIRE_THROWS(softmax_ce(two, 2));
  const std::vector<double> one{1.0};
  REQUIRE_THROWS(softmax_ce(one, 0));

  const std::vector<double> big{1000.0, -1000.0, 999.0};
  double s = 0.0;
  for (double p : softmax(big)) s += p;
  REQUIRE(std::abs(s - 1.0) < 1e-6);

  const std::vector<double> pred{1.0, 2.0}, target{0.0, 2.0};
  REQUIRE(masked_mse(pred, target, {true, false}).loss == 1.0);
  const auto none = masked_mse(pred, target, {false, false});
  REQUIRE(none.loss == 0.0);
  REQUIRE(none.count == 0);
  REQUIRE(masked_mse(pred, pred, {true, true}).loss == 0.0);

  // Analytic gradients against central differences.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> logits(5);
  for (auto& v : logits) v = g(rng);
  const auto ce = softmax_ce(logits, 2);
  const auto r = check_values(logits, ce.grad, [&] { return softmax_ce(logits, 2).loss; }, "ce");
  REQUIRE(r.max_rel <= 1e-4);
  std::vector<double> p(6), t(6);
  for (auto& v : p) v = g(rng);
  for (auto& v : t) v = g(rng);
  const std::vector<bool> mask{true, false, true, true, false, true};
  const auto mse = masked_mse(p, t, mask);
  REQUIRE(check_values(p, mse.grad, [&] { return masked_mse(p, t, mask).loss; }, "mse").max_rel <= 1e-4);
}

TEST_CASE("multi-head attention properties", "[nn][attention]") {
  std::mt19937_64 rng(4);
  MultiHeadAttention<double> mha("mha", 8, 2);
  randomize(mha, rng);
  MultiHeadAttention<double>::Cache c;

  SECTION("single frame attends to itself") {
    const M x = random_matrix(1, 8, rng);
    const M y = mha.forward(x, c);
    for (const auto& p : c.probs) REQUIRE(p(0, 0) == 1.0);
    const M expect = mha.output.forward(mha.value.forward(x));
    for (std::size_t i = 0; i < 8; ++i) REQUIRE(y.data()[i] == Approx(expect.data()[i]).margin(1e-12));
  }
  SECTION("rows of attention weights sum to one") {
    mha.forward(random_matrix(9, 8, rng), c);
    for (const auto& p : c.probs)
      for (std::size_t r = 0; r < p.rows(); ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < p.cols(); ++k) s += p(r, k);
        REQUIRE(std::abs(s - 1.0) < 1e-6);
      }
  }
  SECTION("permutation equivariance") {
    const M x = random_matrix(6, 8, rng);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    M xp(6, 8);
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t d = 0; d < 8; ++d) xp(t, d) = x(perm[t], d);
    const M y = mha.forward(x), yp = mha.forward(xp);
    for (std::size_t t = 0; t < 6; ++t)
      for (std::size_t d = 0; d < 8; ++d) REQUIRE(yp(t, d) == Approx(y(perm[t], d)).margin(1e-12));
  }
  SECTION("divisibility") { REQUIRE_THROWS(MultiHeadAttention<double>("bad", 10, 3)); }
}

TEST_CASE("layer gradients match finite differences", "[nn][gradcheck]") {
  for (const auto& [name, r] : layer_gradchecks(5)) {
    INFO(name << " worst: " << r.worst);
    REQUIRE(r.checked > 0);
    REQUIRE(r.max_rel <= 1e-4);
  }
}

TEST_CASE("gradient linearity and independence", "[nn][gradcheck]") {
  std::mt19937_64 rng(6);
  Linear<double> l("lin", 3, 2);
  randomize(l, rng);
  const M x = random_matrix(2, 3, rng);
  const M w = random_matrix(2, 2, rng);
  l.backward(x, w);
  const auto g1 = l.weight.grad;
  l.weight.zero_grad();
  l.backward(x, scaled(w, 2.0));
  for (std::size_t i = 0; i < g1.size(); ++i) REQUIRE(l.weight.grad[i] == Approx(2.0 * g1[i]).margin(1e-15));

  // A zero input column does not influence the loss, so its weight row has no gradient.
  M xz = x;
  xz(0, 1) = xz(1, 1) = 0.0;
  l.weight.zero_grad();
  l.backward(xz, w);
  REQUIRE(l.weight.grad[2] == 0.0);
  REQUIRE(l.weight.grad[3] == 0.0);
}

TEST_CASE("adam step", "[nn][adam]") {
  Parameter<double> p("p", {3});
  p.value = {1.0, 2.0, 3.0};
  AdamState s;
  p.grad = {1.0, 0.0, -2.0};
  adam_step(p, s, 1e-4);
  REQUIRE(p.value[0] - 1.0 == Approx(-1e-4).epsilon(1e-6));
  REQUIRE(p.value[1] == 2.0);
  REQUIRE(p.value[2] - 3.0 == Approx(1e-4).epsilon(1e-6));

  Parameter<double> q("q", {1});
  AdamState sq;
  q.grad = {0.5};
  adam_step(q, sq, 1e-3);
  const double d1 = std::abs(q.value[0]);
  const double before = q.value[0];
  adam_step(q, sq, 1e-3);
  const double d2 = std::abs(q.value[0] - before);
  REQUIRE(d2 <= d1 * (1.0 + 1e-6));
}

TEST_CASE("plateau schedule", "[nn][adam]") {
  PlateauSchedule sched(1e-3, 2, 0.5);
  REQUIRE_FALSE(sched.observe(1.0));
  REQUIRE_FALSE(sched.observe(1.1));
  REQUIRE_FALSE(sched.observe(1.2));
  REQUIRE(sched.observe(1.3));
  REQUIRE(sched.lr() == 5e-4);
  REQUIRE_FALSE(sched.observe(0.5));
}

TEST_CASE("checkpoints", "[nn][checkpoint]") {
  Checkpoint a;
  a.tensors.push_back({"w", {1}, {0.0f}});
  a.tensors.push_back({"v", {2, 2}, {1.0f, 2.0f, 3.0f, 4.0f}});
  a.stats[3] = {1.5f, 2.5f};
  a.epoch = 7;
  a.val_loss = 0.25f;
  Checkpoint b = a;
  b.tensors[0].data = {2.0f};

  REQUIRE(average_checkpoints(a, a) == a);
  REQUIRE(average_checkpoints(a, b).tensors[0].data[0] == 1.0f);

  Checkpoint c = a;
  c.tensors[1].name = "u";
  REQUIRE_THROWS(average_checkpoints(a, c));
  c = a;
  c.tensors[1].shape = {4};
  REQUIRE_THROWS(average_checkpoints(a, c));
  c = a;
  c.stats[0].sd = 3.0f;
  REQUIRE_THROWS(average_checkpoints(a, c));

  const auto bytes = encode_checkpoint(a);
  REQUIRE(std::string(bytes.begin(), bytes.begin() + 4) == "XCKP");
  REQUIRE(decode_checkpoint(bytes) == a);
  auto bad = bytes;
  bad[1] = 'Z';
  REQUIRE_THROWS(decode_checkpoint(bad));
  bad = bytes;
  bad.resize(bytes.size() - 3);
  REQUIRE_THROWS(decode_checkpoint(bad));
}
