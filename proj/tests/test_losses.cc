// tests/test_losses.cc

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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "eend/error.h"
#include "eend/grad_check.h"
#include "eend/losses.h"
#include "eend/ops.h"
#include "test_util.h"

using namespace eend;
using eend::testing::random_labels;
using eend::testing::random_tensor;

namespace {

// Scalar BCE with the same clamp, written independently of the ops.
double oracle_bce(double y, double p) {
  p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double oracle_pit(const Tensor& yhat, const Tensor& y) {
  const std::size_t frames = y.rows(), speakers = y.cols();
  std::vector<std::size_t> perm(speakers);
  for (std::size_t s = 0; s < speakers; ++s) perm[s] = s;
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t s = 0; s < speakers; ++s)
        total += oracle_bce(y(t, perm[s]), yhat(t, s));
    best = std::min(best, total / static_cast<double>(frames * speakers));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double oracle_mask_bce(const Tensor& mask, const Tensor& a) {
  const std::size_t n = mask.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += oracle_bce(mask(i, j), a(i, j));
  return total / static_cast<double>(n * n);
}

Tensor random_stochastic(std::mt19937_64& rng, std::size_t n) {
  Tensor a = random_tensor(rng, {n, n}, 0.05, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a(i, j);
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= s;
  }
  return a;
}

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t(i, j);
  return m;
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.blocks = 2;
  c.heads = 2;
  c.model_dim = 8;
  c.ff_dim = 16;
  c.input_dim = 10;
  c.speakers = 2;
  return c;
}

}  // namespace

TEST_CASE("diarization loss reference cases") {
  Graph g;
  const Tensor y = Tensor::matrix({{1, 0}, {0, 1}, {1, 1}, {0, 0}});
  CHECK(diarization_loss(g.constant(y), y).loss < 1e-6);
  const PermutationResult half =
      diarization_loss(g.constant(Tensor::matrix({{0.5, 0.5}})), Tensor::matrix({{1, 0}}));
  CHECK(half.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // both permutations tie: the identity wins
  CHECK(half.best_perm == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(diarization_loss(g.constant(Tensor::matrix({{0.5, 0.5}})),
                                   Tensor::matrix({{0.5, 0}})),
                  LabelError);
  CHECK_THROWS_AS(diarization_loss(g.constant(Tensor({2, 2}, 0.5)), Tensor({3, 2})),
                  DimensionError);
}

TEST_CASE("diarization loss equals brute-force permutation search") {
  std::mt19937_64 rng(1);
  for (std::size_t speakers : {1u, 2u, 3u}) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t frames = 1 + trial % 5;
      const Tensor yhat = random_tensor(rng, {frames, speakers}, 0.01, 0.99);
      const Tensor y = random_labels(rng, frames, speakers);
      Graph g;
      const PermutationResult r = diarization_loss(g.constant(yhat), y);
      CHECK(std::abs(r.loss - oracle_pit(yhat, y)) < 1e-12);
      CHECK(std::abs(r.loss_var.value()[0] - r.loss) < 1e-15);
      CHECK(diarization_loss(yhat, y).loss == r.loss);
    }
  }
}

TEST_CASE("diarization loss is invariant to label column order") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor yhat = random_tensor(rng, {6, 2}, 0.01, 0.99);
    const Tensor y = random_labels(rng, 6, 2);
    CHECK(diarization_loss(yhat, y).loss ==
          diarization_loss(yhat, permute_columns(y, {1, 0})).loss);
  }
}

TEST_CASE("svad masks") {
  const Tensor y = Tensor::matrix({{1, 0}, {0, 0}, {1, 0}});
  CHECK(svad_mask(y, {0, 1}, 0) == Tensor::matrix({{1, 0, 1}, {0, 0, 0}, {1, 0, 1}}));
  CHECK(svad_mask(y, {0, 1}, 1) == Tensor({3, 3}, 0.0));
  CHECK(svad_mask(Tensor({3, 2}, 1.0), {0, 1}, 1) == Tensor({3, 3}, 1.0));
  // the permutation picks which label column feeds output s
  CHECK(svad_mask(y, {1, 0}, 1) == svad_mask(y, {0, 1}, 0));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor labels = random_labels(rng, 9, 2, 0.4);
    for (std::size_t s = 0; s < 2; ++s) {
      const Tensor m = svad_mask(labels, {0, 1}, s);
      for (std::size_t i = 0; i < 9; ++i) {
        CHECK(m(i, i) == labels(i, s));
        for (std::size_t j = 0; j < 9; ++j) {
          CHECK(m(i, j) == m(j, i));
          CHECK(m(i, j) * m(i, j) == m(i, j));
        }
      }
      CHECK(to_eigen(m).fullPivLu().rank() <= 1);
    }
  }
}

TEST_CASE("svad loss") {
  Graph g;
  const Tensor mask = Tensor::matrix({{1, 0}, {0, 1}});
  const SvadResult half = svad_loss({mask}, {g.constant(Tensor({2, 2}, 0.5))});
  CHECK(half.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const Tensor labels = Tensor::matrix({{1, 0}, {1, 1}, {0, 1}, {0, 0}});
  const Tensor m0 = svad_mask(labels, {0, 1}, 0), m1 = svad_mask(labels, {0, 1}, 1);
  CHECK(svad_loss({m0, m1}, {g.constant(m0), g.constant(m1)}).loss < 1e-5);
  // pairing is searched: swapped heads are matched back
  const SvadResult swapped = svad_loss({m0, m1}, {g.constant(m1), g.constant(m0)});
  CHECK(swapped.loss < 1e-5);
  CHECK(swapped.assignment == std::vector<std::size_t>{1, 0});
  CHECK_THROWS_AS(svad_loss({m0}, {g.constant(m0), g.constant(m1)}), DimensionError);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor y = random_labels(rng, 4, 2);
    const Tensor a0 = random_stochastic(rng, 4), a1 = random_stochastic(rng, 4);
    const Tensor k0 = svad_mask(y, {0, 1}, 0), k1 = svad_mask(y, {0, 1}, 1);
    const double direct = oracle_mask_bce(k0, a0) + oracle_mask_bce(k1, a1);
    const double crossed = oracle_mask_bce(k0, a1) + oracle_mask_bce(k1, a0);
    const SvadResult r = svad_loss({k0, k1}, {g.constant(a0), g.constant(a1)});
    CHECK(std::abs(r.loss - std::min(direct, crossed)) < 1e-12);
  }
}

TEST_CASE("osd labels and masks") {
  const Tensor psi = osd_labels(Tensor::matrix({{0, 0}, {1, 0}, {1, 1}}));
  CHECK(psi[0] == 0.0);
  CHECK(psi[1] == std::sqrt(0.5));
  CHECK(psi[2] == 1.0);
  CHECK(osd_labels(Tensor({4, 2}, 0.0)) == Tensor({4}, 0.0));
  CHECK(osd_labels(Tensor({4, 2}, 1.0)) == Tensor({4}, 1.0));

  // single/single entries are exactly one half
  const Tensor m = osd_mask(psi);
  CHECK(m(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m(1, 2) == std::sqrt(0.5));
  CHECK(m(0, 2) == 0.0);
  CHECK(m(2, 2) == 1.0);
}

TEST_CASE("osd loss") {
  Graph g;
  const Tensor psi = osd_labels(Tensor::matrix({{0, 1}, {1, 1}, {0, 0}}));
  CHECK(osd_loss(psi, g.constant(osd_mask(psi))).loss == 0.0);
  CHECK(osd_loss(Tensor::vector({1}), g.constant(Tensor::matrix({{1}}))).loss == 0.0);
  CHECK(osd_loss(Tensor::vector({1}), g.constant(Tensor::matrix({{0.5}}))).loss == 0.25);
  CHECK_THROWS_AS(osd_loss(psi, g.constant(Tensor({2, 2}))), DimensionError);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor y = random_labels(rng, 4, 2);
    const Tensor a = random_stochastic(rng, 4);
    const Tensor p = osd_labels(y);
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        const double d = p[i] * p[j] - a(i, j);
        total += d * d;
      }
    CHECK(std::abs(osd_loss(p, g.constant(a)).loss - total / 16.0) < 1e-12);
  }
}

TEST_CASE("head selection by trace") {
  const std::size_t n = 5;
  Tensor identity({n, n}), uniform({n, n}, 1.0 / n);
  for (std::size_t i = 0; i < n; ++i) identity(i, i) = 1.0;
  CHECK(trace(identity) == 5.0);
  CHECK(trace(uniform) == doctest::Approx(1.0).epsilon(1e-15));

  const HeadSelection a = select_heads({uniform, uniform, identity, uniform}, 2, false, false);
  CHECK(a.order.front() == 2);
  const HeadSelection u = select_heads({uniform, uniform, uniform, uniform}, 2, true, true);
  CHECK(u.order == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(u.svad_heads == std::vector<std::size_t>{0, 1});
  CHECK(u.osd_head == 2u);

  // diagonals scaled to the traces 3.1, 7.2, 0.9, 5.0
  std::vector<Tensor> heads;
  for (double tr : {3.1, 7.2, 0.9, 5.0}) {
    Tensor h({n, n});
    for (std::size_t i = 0; i < n; ++i) h(i, i) = tr / n;
    heads.push_back(h);
  }
  const HeadSelection other = select_heads(heads, 2, true, false);
  CHECK(other.order == std::vector<std::size_t>{1, 3, 0, 2});
  CHECK(other.svad_heads == std::vector<std::size_t>{1, 3});
  CHECK(other.osd_head == 1u);
  const HeadSelection same = select_heads(heads, 2, true, true);
  CHECK(same.svad_heads == std::vector<std::size_t>{1, 3});
  CHECK(same.osd_head == 0u);
  const HeadSelection shared =
      select_heads(heads, 2, true, true, SelectionPolicy::kIdentityTrace,
                   SharedBlockPolicy::kSharedTop);
  CHECK(shared.osd_head == 1u);
  const HeadSelection fixed =
      select_heads(heads, 2, true, true, SelectionPolicy::kFixedFirst);
  CHECK(fixed.svad_heads == std::vector<std::size_t>{0, 1});
  CHECK(fixed.osd_head == 2u);
  CHECK(fixed.order == other.order);

  CHECK_THROWS_AS(select_heads({identity, uniform}, 2, true, true), ConfigError);
  CHECK_NOTHROW(select_heads({identity, uniform}, 2, true, false));
}

TEST_CASE("head ranking is a stable permutation") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Tensor> heads;
    std::uniform_int_distribution<int> coarse(0, 3);
    for (int h = 0; h < 6; ++h) {
      Tensor m({4, 4});
      // coarse diagonal values force frequent ties
      for (std::size_t i = 0; i < 4; ++i) m(i, i) = coarse(rng) * 0.25;
      heads.push_back(m);
    }
    const auto order = rank_heads_by_trace(heads);
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 6; ++i) CHECK(sorted[i] == i);
    for (std::size_t i = 1; i < 6; ++i) {
      const double prev = trace(heads[order[i - 1]]), cur = trace(heads[order[i]]);
      CHECK(prev >= cur);
      if (prev == cur) CHECK(order[i - 1] < order[i]);
    }
  }
}

TEST_CASE("total loss composition") {
  ModelParams p = init_params(tiny_config(), 7);
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor(rng, {8, 10});
  const Tensor y = random_labels(rng, 8, 2);
  LossConfig cfg;
  cfg.svad_block = 2;
  cfg.osd_block = 1;

  Graph g;
  const ModelOutput out = forward(g, p, x);
  cfg.alpha = cfg.beta = 0.0;
  const LossBreakdown plain = total_loss(out, y, cfg);
  CHECK(plain.total == plain.diarization);
  CHECK(plain.svad == 0.0);
  CHECK(plain.osd == 0.0);
  CHECK_FALSE(plain.svad_selection.has_value());

  cfg.alpha = cfg.beta = 1.0;
  const LossBreakdown full = total_loss(out, y, cfg);
  CHECK(full.total == doctest::Approx(full.diarization + full.svad + full.osd).epsilon(1e-14));
  CHECK(full.svad_selection->block == 2);
  CHECK(full.osd_selection->block == 1);
  CHECK(describe_selection(full).find("b2:svad") == 0);

  cfg.svad_block = 3;
  CHECK_THROWS_AS(total_loss(out, y, cfg), ConfigError);
  cfg.svad_block = 0;
  CHECK_THROWS_AS(total_loss(out, y, cfg), ConfigError);
}

TEST_CASE("auxiliary terms vanish when attention equals the masks") {
  // posteriors and attention are plain constants standing in for a model
  Graph g;
  const Tensor y = Tensor::matrix({{1, 0}, {1, 1}, {0, 1}, {0, 0}, {1, 0}});
  ModelOutput out;
  out.posteriors = g.constant(Tensor({5, 2}, 0.3));
  const PermutationResult pit = diarization_loss(out.posteriors, y);
  const Tensor m0 = svad_mask(y, pit.best_perm, 0), m1 = svad_mask(y, pit.best_perm, 1);
  const Tensor mo = osd_mask(osd_labels(y));
  Tensor filler({5, 5});
  out.attention = {{g.constant(mo), g.constant(filler)},
                   {g.constant(m0), g.constant(m1)}};
  LossConfig cfg;
  cfg.svad_block = 2;
  cfg.osd_block = 1;
  const LossBreakdown b = total_loss(out, y, cfg);
  CHECK(b.osd == 0.0);
  CHECK(b.svad < 1e-5);
  CHECK(b.total - b.diarization < 1e-5);
}

TEST_CASE("zero auxiliary weights leave gradients bit-identical") {
  ModelParams p = init_params(tiny_config(), 9);
  p.set_requires_grad(true);
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor(rng, {8, 10});
  const Tensor y = random_labels(rng, 8, 2);
  auto grads = [&](bool through_total) {
    p.zero_grad();
    Graph g;
    const ModelOutput out = forward(g, p, x);
    LossConfig cfg;
    cfg.alpha = cfg.beta = 0.0;
    cfg.svad_block = 2;
    const Var root = through_total ? total_loss(out, y, cfg).total_var
                                   : diarization_loss(out.posteriors, y).loss_var;
    g.backward(root);
    std::vector<double> all;
    for (Tensor* t : p.all()) all.insert(all.end(), t->grad().begin(), t->grad().end());
    return all;
  };
  CHECK(grads(true) == grads(false));
}

TEST_CASE("full model gradients of every loss") {
  ModelParams p = init_params(tiny_config(), 11);
  std::mt19937_64 rng(12);
  const Tensor x = random_tensor(rng, {8, 10});
  const Tensor y = random_labels(rng, 8, 2);
  struct Case {
    const char* name;
    double alpha, beta;
    bool aux_only;
  };
  for (const Case& c : {Case{"L_d", 0.0, 0.0, false}, Case{"L_S", 1.0, 0.0, true},
                        Case{"L_O", 0.0, 1.0, true}, Case{"L_total", 1.0, 1.0, false}}) {
    LossConfig cfg;
    cfg.alpha = c.alpha;
    cfg.beta = c.beta;
    cfg.svad_block = 2;
    cfg.osd_block = 1;
    auto f = [&](Graph& g) {
      const ModelOutput out = forward(g, p, x);
      const LossBreakdown b = total_loss(out, y, cfg);
      if (!c.aux_only) return b.total_var;
      // rebuild the auxiliary term alone so untouched parameters stay exactly zero
      if (c.beta == 0.0) {
        std::vector<Tensor> masks;
        std::vector<Var> heads;
        for (std::size_t s = 0; s < 2; ++s) {
          masks.push_back(svad_mask(y, b.perm, s));
          heads.push_back(out.attention[1][b.svad_selection->svad_heads[s]]);
        }
        return svad_loss(masks, heads).loss_var;
      }
      return osd_loss(osd_labels(y), out.attention[0][*b.osd_selection->osd_head]).loss_var;
    };
    const GradCheckResult r = grad_check(f, p.all(), 1e-5);
    INFO(std::string(c.name), " worst ", r.analytic, " vs ", r.numeric);
    CHECK(r.max_rel_error < 1e-4);
  }
}
