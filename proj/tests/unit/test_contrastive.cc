// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "mulan/contrastive/loss.h"
#include "mulan/error.h"
#include "mulan/model/towers.h"
#include "mulan/nn/gradcheck.h"
#include "mulan/nn/ops.h"
#include "test_util.h"

using namespace mulan;
using namespace mulan::contrastive;
using mulan::testing::random_tensor;
using mulan::testing::random_unit;

namespace {

nn::Tensor rows_of(const std::vector<std::vector<double>>& rows) {
  nn::Tensor t = nn::Tensor::matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), t.row(i).begin());
  return t;
}

nn::Tensor random_units(std::size_t b, std::size_t d, std::mt19937_64& rng) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < b; ++i) rows.push_back(random_unit(d, rng));
  return rows_of(rows);
}

// Direct evaluation of the batch loss from its definition, one term at a time.
double oracle_loss(const nn::Tensor& a, const nn::Tensor& t, double tau, bool inclusive) {
  const std::size_t b = a.rows(), d = a.cols();
  auto h = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += a.at(i, k) * t.at(j, k);
    return std::exp(s / tau);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double denom = inclusive ? 2.0 * h(i, i) : 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (j != i) denom += h(i, j) + h(j, i);
    }
    total += -std::log(h(i, i) / denom);
  }
  return total;
}

// a_i = e_i and t_j = (S[0][j], ..., S[B-1][j], r_j) so that cosine(a_i, t_j) = S[i][j].
std::pair<nn::Tensor, nn::Tensor> from_similarities(const std::vector<std::vector<double>>& s) {
  const std::size_t b = s.size();
  nn::Tensor a = nn::Tensor::matrix(b, b + 1), t = nn::Tensor::matrix(b, b + 1);
  for (std::size_t i = 0; i < b; ++i) a.at(i, i) = 1.0;
  for (std::size_t j = 0; j < b; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      t.at(j, i) = s[i][j];
      sq += s[i][j] * s[i][j];
    }
    t.at(j, b) = std::sqrt(1.0 - sq);
  }
  return {a, t};
}

}  // namespace

TEST_CASE("critic closed forms") {
  const std::vector<double> e1 = {1, 0}, e2 = {0, 1}, m1 = {-1, 0};
  CHECK(critic(e1, e2, 0.1) == 1.0);
  CHECK(critic(e1, e2, 0.7) == 1.0);
  CHECK(critic(e1, e1, 0.1) == doctest::Approx(22026.4658).epsilon(1e-9));
  CHECK(critic(e1, m1, 1.0) == doctest::Approx(0.367879).epsilon(1e-6));
}

TEST_CASE("loss closed forms on two-pair batches") {
  const nn::Tensor perfect = rows_of({{1, 0, 0, 0}, {0, 1, 0, 0}});
  CHECK(cmc_loss_value(perfect, perfect, 0.1, Denominator::kExclusive) ==
        doctest::Approx(2.0 * (-10.0 + std::log(2.0))).epsilon(1e-12));
  CHECK(std::abs(cmc_loss_value(perfect, perfect, 0.1, Denominator::kExclusive) - -18.61371) < 1e-4);
  CHECK(std::abs(cmc_loss_value(perfect, perfect, 0.1, Denominator::kInclusive) -
                 2.0 * std::log(2.0 + 2.0 * std::exp(-10.0))) < 1e-6);
  const nn::Tensor same = rows_of({{0.6, 0.8}, {0.6, 0.8}});
  for (double tau : {0.001, 0.1, 0.5, 1.0}) {
    CHECK(std::abs(cmc_loss_value(same, same, tau, Denominator::kExclusive) - 2.0 * std::log(2.0)) < 1e-9);
    CHECK(std::abs(cmc_loss_value(same, same, tau, Denominator::kInclusive) - 2.0 * std::log(4.0)) < 1e-9);
  }
  CHECK(std::abs(2.0 * std::log(4.0) - 2.77259) < 1e-5);
}

TEST_CASE("loss matches the direct definition on random batches") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + trial % 6, d = 3 + trial % 5;
    const nn::Tensor a = random_units(b, d, rng), t = random_units(b, d, rng);
    const double tau = 0.05 + (trial % 10) * 0.09;
    CHECK(cmc_loss_value(a, t, tau, Denominator::kExclusive) ==
          doctest::Approx(oracle_loss(a, t, tau, false)).epsilon(1e-10));
    const double inclusive = cmc_loss_value(a, t, tau, Denominator::kInclusive);
    CHECK(inclusive == doctest::Approx(oracle_loss(a, t, tau, true)).epsilon(1e-10));
    CHECK(inclusive >= 0.0);
  }
}

TEST_CASE("loss is invariant to permuting the pairs") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 2 + trial % 7, d = 4;
    const nn::Tensor a = random_units(b, d, rng), t = random_units(b, d, rng);
    std::vector<std::size_t> perm(b);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    nn::Tensor pa = a, pt = t;
    for (std::size_t i = 0; i < b; ++i) {
      std::copy(a.row(perm[i]).begin(), a.row(perm[i]).end(), pa.row(i).begin());
      std::copy(t.row(perm[i]).begin(), t.row(perm[i]).end(), pt.row(i).begin());
    }
    for (Denominator den : {Denominator::kExclusive, Denominator::kInclusive}) {
      CHECK(std::abs(cmc_loss_value(a, t, 0.1, den) - cmc_loss_value(pa, pt, 0.1, den)) < 1e-12);
    }
  }
}

TEST_CASE("loss stays finite at the minimum temperature") {
  std::mt19937_64 rng(14);
  const nn::Tensor a = random_units(8, 6, rng);
  for (Denominator den : {Denominator::kExclusive, Denominator::kInclusive}) {
    CHECK(std::isfinite(cmc_loss_value(a, a, 1e-3, den)));
  }
  const nn::Tensor perfect = rows_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  CHECK(cmc_loss_value(perfect, perfect, 1e-3, Denominator::kExclusive) ==
        doctest::Approx(3.0 * (-1000.0 + std::log(4.0))));
}

TEST_CASE("raising a negative pair's cosine never lowers the loss") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-0.5, 0.5), step(1e-3, 0.1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t b = 2 + trial % 3;
    std::vector<std::vector<double>> s(b, std::vector<double>(b));
    for (auto& row : s) {
      for (double& x : row) x = u(rng);
    }
    const std::size_t i = rng() % b, j = (i + 1 + rng() % (b - 1)) % b;
    auto raised = s;
    raised[i][j] += step(rng);
    const auto [a0, t0] = from_similarities(s);
    const auto [a1, t1] = from_similarities(raised);
    for (Denominator den : {Denominator::kExclusive, Denominator::kInclusive}) {
      CHECK(cmc_loss_value(a1, t1, 0.2, den) >= cmc_loss_value(a0, t0, 0.2, den));
    }
  }
}

TEST_CASE("aligned batches score lower than their derangement") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 2 + trial % 6, d = 8;
    const nn::Tensor a = random_units(b, d, rng);
    nn::Tensor t = a;
    std::normal_distribution<double> noise(0.0, 0.05);
    for (std::size_t r = 0; r < b; ++r) {
      double n = 0.0;
      for (double& x : t.row(r)) {
        x += noise(rng);
        n += x * x;
      }
      for (double& x : t.row(r)) x /= std::sqrt(n);
    }
    nn::Tensor shifted = t;
    for (std::size_t r = 0; r < b; ++r) {
      std::copy(t.row((r + 1) % b).begin(), t.row((r + 1) % b).end(), shifted.row(r).begin());
    }
    CHECK(cmc_loss_value(a, t, 0.1, Denominator::kExclusive) <
          cmc_loss_value(a, shifted, 0.1, Denominator::kExclusive));
  }
}

TEST_CASE("batches of fewer than two pairs are rejected") {
  const nn::Tensor one = rows_of({{1, 0}});
  CHECK_THROWS_AS(cmc_loss_value(one, one, 0.1, Denominator::kExclusive), BatchError);
}

TEST_CASE("loss gradients w.r.t. embeddings and temperature") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 2 + trial % 4, d = 3 + trial % 3;
    const nn::Tensor a = random_tensor({b, d}, rng), t = random_tensor({b, d}, rng);
    const nn::Tensor theta = nn::Tensor::scalar(std::log(0.05 + 0.04 * (trial % 5)));
    for (Denominator den : {Denominator::kExclusive, Denominator::kInclusive}) {
      const auto r = nn::check_gradients(
          [&](nn::Tape&, std::span<const nn::Var> v) {
            return cmc_loss(nn::l2_normalize(v[0]), nn::l2_normalize(v[1]), temperature(v[2], 1e-3), den);
          },
          {a, t, theta});
      INFO(r.worst);
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("temperature clamp and updates") {
  CHECK(tau_of(std::log(0.1), 1e-3) == doctest::Approx(0.1));
  CHECK(tau_of(0.5, 1e-3) == 1.0);
  CHECK(tau_of(-20.0, 1e-3) == 1e-3);

  nn::OptimizerConfig opt;
  TemperatureParam p;
  p.theta = std::log(0.1);
  const double before = p.tau();
  update_temperature(p, 0.0, opt, 0.1);
  CHECK(p.tau() == before);

  for (int i = 0; i < 200; ++i) update_temperature(p, -1.0, opt, 0.1);
  CHECK(p.tau() == 1.0);
  for (int i = 0; i < 2000; ++i) {
    update_temperature(p, 1.0, opt, 0.5);
    CHECK(p.tau() >= 1e-3);
    CHECK(p.tau() <= 1.0);
  }
  CHECK(p.tau() == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(parse_denominator("inclusive") == Denominator::kInclusive);
  CHECK(denominator_name(Denominator::kExclusive) == "exclusive");
  CHECK_THROWS_AS(parse_denominator("mean"), ConfigError);
}

TEST_CASE("end-to-end loss gradient through both towers") {
  model::ModelConfig cfg;
  for (model::TowerConfig* t : {&cfg.audio, &cfg.text}) {
    t->num_layers = 2;
    t->hidden_dim = 8;
    t->num_heads = 2;
    t->mlp_dim = 16;
    t->embed_dim = 4;
    t->patch_size = 4;
    t->patch_stride = 4;
  }
  cfg.text.vocab_size = 10;
  cfg.text.max_positions = 6;
  cfg.mel_channels = 8;
  cfg.window_frames = 8;
  cfg.init_std = 0.3;
  std::mt19937_64 rng(18);
  nn::ParameterStore store;
  model::init_tower_parameters(store, cfg, rng);
  store.add(kLogTauName, nn::Tensor::scalar(std::log(0.2)));
  std::vector<dsp::ContextWindow> windows(3);
  std::vector<text::TokenSequence> texts(3);
  for (std::size_t i = 0; i < 3; ++i) {
    windows[i].values = random_tensor({8, 8}, rng);
    texts[i].ids = {1, static_cast<int>(3 + i), static_cast<int>(4 + 2 * i), 0, 0, 0};
    texts[i].attention_mask = {1, 1, 1, 0, 0, 0};
  }
  const auto r = nn::check_parameter_gradients(store, [&](nn::Tape& tape) {
    nn::Var a = model::audio_tower(tape, store, cfg, windows[0]);
    nn::Var t = model::text_tower(tape, store, cfg, texts[0]);
    for (std::size_t i = 1; i < 3; ++i) {
      a = nn::concat_rows(a, model::audio_tower(tape, store, cfg, windows[i]));
      t = nn::concat_rows(t, model::text_tower(tape, store, cfg, texts[i]));
    }
    return cmc_loss(a, t, temperature(store.bind(tape, kLogTauName), 1e-3), Denominator::kExclusive);
  });
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-4);
}
