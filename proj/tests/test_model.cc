// tests/test_model.cc

// Copyright 2026  The EEND-Aux Authors

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "eend/error.h"
#include "eend/grad_check.h"
#include "eend/model.h"
#include "eend/ops.h"
#include "test_util.h"

using namespace eend;
using eend::testing::random_tensor;

namespace {

ModelConfig tiny_config(std::size_t input_dim = 10) {
  ModelConfig c;
  c.blocks = 2;
  c.heads = 2;
  c.model_dim = 8;
  c.ff_dim = 16;
  c.input_dim = input_dim;
  c.speakers = 2;
  return c;
}

void check_row_stochastic(const Tensor& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      CHECK(a(i, j) >= 0.0);
      CHECK(a(i, j) <= 1.0);
      s += a(i, j);
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("init_params is deterministic with unit LN gains") {
  const ModelParams a = init_params(tiny_config(), 5);
  const ModelParams b = init_params(tiny_config(), 5);
  const auto na = a.named(), nb = b.named();
  REQUIRE(na.size() == nb.size());
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].first == nb[i].first);
    CHECK(*na[i].second == *nb[i].second);
    if (na[i].first.find(".gain") != std::string::npos)
      for (double v : na[i].second->data()) CHECK(v == 1.0);
  }
}

TEST_CASE("initial weights are centred uniform within the fan-in bound") {
  ModelConfig c;
  c.input_dim = 345;
  ModelParams p = init_params(c, 9);
  double sum = 0.0;
  std::size_t n = 0;
  for (auto& [name, t] : p.named()) {
    if (name.find("gain") != std::string::npos || name.find("bias") != std::string::npos)
      continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(t->rows()));
    for (double v : t->data()) {
      CHECK(std::abs(v) <= bound);
      sum += v / bound;
      ++n;
    }
  }
  REQUIRE(n >= 10000);
  // scaled entries are U[-1, 1] with variance 1/3
  const double standard_error = std::sqrt(1.0 / 3.0 / static_cast<double>(n));
  CHECK(std::abs(sum / static_cast<double>(n)) < 3.0 * standard_error);
}

TEST_CASE("embed_input") {
  ModelConfig c = tiny_config(8);
  ModelParams p = init_params(c, 1);
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, {4, 8});
  {
    ModelParams zero = p;
    std::fill(zero.w_in.data().begin(), zero.w_in.data().end(), 0.0);
    Graph g;
    for (double v : embed_input(g, zero, x).value().data()) CHECK(v == 0.0);
  }
  {
    ModelParams ident = p;
    std::fill(ident.w_in.data().begin(), ident.w_in.data().end(), 0.0);
    for (std::size_t i = 0; i < 8; ++i) ident.w_in(i, i) = 1.0;
    std::fill(ident.ln_in_gain.data().begin(), ident.ln_in_gain.data().end(), 2.0);
    std::fill(ident.ln_in_bias.data().begin(), ident.ln_in_bias.data().end(), 0.5);
    Graph g;
    const Tensor& e = embed_input(g, ident, x).value();
    for (std::size_t t = 0; t < 4; ++t) {
      double mu = 0.0, var = 0.0;
      for (std::size_t j = 0; j < 8; ++j) mu += x(t, j) / 8.0;
      for (std::size_t j = 0; j < 8; ++j) var += (x(t, j) - mu) * (x(t, j) - mu) / 8.0;
      for (std::size_t j = 0; j < 8; ++j)
        CHECK(e(t, j) == doctest::Approx(2.0 * (x(t, j) - mu) / std::sqrt(var + 1e-5) + 0.5)
                             .epsilon(1e-12));
    }
  }
  Graph g;
  CHECK_THROWS_AS(embed_input(g, p, Tensor({4, 9})), DimensionError);
  const Tensor w = random_tensor(rng, {4, 8});
  auto f = [&](Graph& gg) {
    return sum(mul(embed_input(gg, p, x), gg.constant(w)));
  };
  CHECK(grad_check(f, {&p.w_in, &p.b_in, &p.ln_in_gain, &p.ln_in_bias}).max_rel_error < 1e-5);
}

TEST_CASE("encoder block") {
  ModelConfig c = tiny_config(8);
  ModelParams p = init_params(c, 3);
  std::mt19937_64 rng(4);
  SUBCASE("zero query/key weights give uniform attention") {
    EncoderBlockParams b = p.blocks[0];
    for (auto& w : b.w_query) std::fill(w.data().begin(), w.data().end(), 0.0);
    for (auto& w : b.w_key) std::fill(w.data().begin(), w.data().end(), 0.0);
    Graph g;
    const BlockOutput out = encoder_block(g.constant(random_tensor(rng, {5, 8})), b, 2);
    REQUIRE(out.attention.size() == 2);
    for (const Var& a : out.attention)
      for (double v : a.value().data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("single frame attends to itself") {
    Graph g;
    const BlockOutput out = encoder_block(g.constant(random_tensor(rng, {1, 8})), p.blocks[0], 2);
    for (const Var& a : out.attention) CHECK(a.value()[0] == 1.0);
  }
  SUBCASE("gradient of the block output") {
    const Tensor x = random_tensor(rng, {6, 8});
    const Tensor w = random_tensor(rng, {6, 8});
    EncoderBlockParams& b = p.blocks[0];
    std::vector<Tensor*> params;
    for (std::size_t h = 0; h < 2; ++h)
      params.insert(params.end(), {&b.w_query[h], &b.w_key[h], &b.w_value[h]});
    params.insert(params.end(), {&b.w_out, &b.b_out, &b.ln1_gain, &b.ln1_bias, &b.w_ff1,
                                 &b.b_ff1, &b.w_ff2, &b.b_ff2, &b.ln2_gain, &b.ln2_bias});
    // a plain sum of a layer-normed output is constant, so weight it
    auto f = [&](Graph& g) {
      return sum(mul(encoder_block(g.constant(x), b, 2).embeddings, g.constant(w)));
    };
    CHECK(grad_check(f, params).max_rel_error < 1e-4);
  }
}

TEST_CASE("forward pass") {
  ModelConfig c = tiny_config();
  ModelParams p = init_params(c, 6);
  std::mt19937_64 rng(7);
  SUBCASE("zero posterior head gives 0.5 everywhere") {
    ModelParams z = p;
    std::fill(z.w_head.data().begin(), z.w_head.data().end(), 0.0);
    Graph g;
    for (double v : forward(g, z, random_tensor(rng, {5, 10})).posteriors.value().data())
      CHECK(v == 0.5);
  }
  SUBCASE("attention rows are stochastic for any length") {
    for (std::size_t frames : {1u, 2u, 16u}) {
      Graph g;
      const ModelOutput out = forward(g, p, random_tensor(rng, {frames, 10}, -3.0, 3.0));
      const AttentionTensor att = collect_attention(out);
      CHECK(att.blocks == 2);
      CHECK(att.heads == 2);
      for (const Tensor& a : att.weights) check_row_stochastic(a);
      for (double v : out.posteriors.value().data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
  SUBCASE("frame permutation equivariance") {
    const Tensor x = random_tensor(rng, {12, 10});
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor xp({12, 10});
    for (std::size_t t = 0; t < 12; ++t)
      for (std::size_t j = 0; j < 10; ++j) xp(t, j) = x(perm[t], j);
    Graph g1, g2;
    const ModelOutput a = forward(g1, p, x);
    const ModelOutput b = forward(g2, p, xp);
    for (std::size_t t = 0; t < 12; ++t) {
      for (std::size_t s = 0; s < 2; ++s)
        CHECK(std::abs(b.posteriors.value()(t, s) - a.posteriors.value()(perm[t], s)) < 1e-9);
      for (std::size_t level = 0; level < a.embeddings.size(); ++level)
        for (std::size_t j = 0; j < 8; ++j)
          CHECK(std::abs(b.embeddings[level].value()(t, j) -
                         a.embeddings[level].value()(perm[t], j)) < 1e-9);
    }
  }
  SUBCASE("forward is deterministic") {
    const Tensor x = random_tensor(rng, {7, 10});
    Graph g1, g2;
    CHECK(forward(g1, p, x).posteriors.value() == forward(g2, p, x).posteriors.value());
  }
}
