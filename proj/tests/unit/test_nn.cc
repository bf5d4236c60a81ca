// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mulan/error.h"
#include "mulan/nn/adam.h"
#include "mulan/nn/checkpoint.h"
#include "mulan/nn/gradcheck.h"
#include "mulan/nn/logistic_regression.h"
#include "mulan/nn/ops.h"
#include "mulan/nn/parameter_store.h"
#include "test_util.h"

using namespace mulan;
using namespace mulan::nn;
using mulan::testing::random_tensor;

namespace {

// Projects an arbitrary output onto a fixed random direction so every output
// coordinate carries gradient.
Var project(Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = y.tape().constant(random_tensor(y.shape(), rng));
  return sum(mul(y, w));
}

void expect_gradients(const InputGraph& g, const std::vector<Tensor>& inputs, double tol = 1e-6) {
  const GradCheckReport r = check_gradients(g, inputs);
  INFO("worst ", r.worst, " rel ", r.max_rel_error);
  CHECK(r.coordinates > 0);
  CHECK(r.max_rel_error < tol);
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t = Tensor::matrix(2, 3, 1.5);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
  t.at(1, 2) = 4.0;
  CHECK(t.row(1)[2] == 4.0);
  CHECK(Tensor::scalar(3.0).item() == 3.0);
  CHECK(Tensor::vector({1, 2, 3}).rows() == 1);
  CHECK(shape_string({2, 3}) == "[2x3]");
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("tape rejects a second backward pass and non-finite values") {
  Tape tape;
  Var x = tape.variable(Tensor::scalar(2.0));
  Var y = mul(x, x);
  tape.backward(y);
  CHECK(x.grad().item() == 4.0);
  CHECK_THROWS_AS(tape.backward(y), StateError);

  Tape t2;
  Var z = t2.variable(Tensor::scalar(-1.0));
  CHECK_THROWS_AS(log(z), NumericError);
}

TEST_CASE("every primitive passes central finite differences") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    const std::size_t m = 1 + trial % 3, k = 2 + trial % 4, n = 1 + (trial * 7) % 5;
    const Tensor a = random_tensor({m, k}, rng);
    const Tensor b = random_tensor({k, n}, rng);
    const Tensor c = random_tensor({m, k}, rng);
    const Tensor bias = random_tensor({n}, rng);
    const Tensor row_bias = random_tensor({k}, rng);
    const auto seed = static_cast<std::uint64_t>(trial);

    expect_gradients([&](Tape&, std::span<const Var> v) { return project(matmul(v[0], v[1]), seed); }, {a, b});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(linear(v[0], v[1], v[2]), seed); },
                     {a, b, bias});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(add(v[0], v[1]), seed); }, {a, c});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(sub(v[0], v[1]), seed); }, {a, c});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(mul(v[0], v[1]), seed); }, {a, c});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(add_row(v[0], v[1]), seed); },
                     {a, row_bias});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(scale(v[0], -1.7), seed); }, {a});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(mean_rows(v[0]), seed); }, {a});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(exp(v[0]), seed); }, {a});
    Tensor pos = a;
    for (double& x : pos.data()) x = 0.5 + std::abs(x);
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(log(v[0]), seed); }, {pos});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(gelu(v[0]), seed); }, {a});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(softmax(v[0]), seed); }, {a});
    const Tensor gain = random_tensor({k}, rng);
    expect_gradients(
        [&](Tape&, std::span<const Var> v) { return project(layer_norm(v[0], v[1], v[2]), seed); },
        {a, gain, row_bias}, 1e-4);
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(l2_normalize(v[0]), seed); }, {a});
    const std::vector<int> ids = {0, 2, 1, 2};
    const Tensor table = random_tensor({3, k}, rng);
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(embedding(v[0], ids), seed); }, {table});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(concat_rows(v[0], v[1]), seed); },
                     {a, c});
    expect_gradients([&](Tape&, std::span<const Var> v) { return project(take_row(v[0], m - 1), seed); }, {a});
    expect_gradients([&](Tape&, std::span<const Var> v) { return pick(v[0], 0); }, {a});

    const std::size_t heads = 1 + trial % 2, len = 2 + trial % 4;
    const Tensor qkv = random_tensor({len, 3 * heads * 2}, rng);
    std::vector<std::uint8_t> mask(len, 1);
    mask[len - 1] = static_cast<std::uint8_t>(trial % 2);
    expect_gradients(
        [&](Tape&, std::span<const Var> v) { return project(masked_attention(v[0], heads, mask), seed); }, {qkv});
  }
}

TEST_CASE("masked attention ignores masked keys exactly") {
  std::mt19937_64 rng(5);
  const std::size_t len = 6, heads = 2, hidden = 8;
  Tensor qkv = random_tensor({len, 3 * hidden}, rng);
  std::vector<std::uint8_t> mask = {1, 1, 1, 1, 0, 0};
  Tape t1;
  const Tensor full = masked_attention(t1.constant(qkv), heads, mask).value();

  // Perturbing masked rows changes nothing in the unmasked rows.
  Tensor perturbed = qkv;
  for (std::size_t r = 4; r < len; ++r)
    for (double& x : perturbed.row(r)) x += 3.0;
  Tape t2;
  const Tensor again = masked_attention(t2.constant(perturbed), heads, mask).value();
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < hidden; ++c) CHECK(full.at(r, c) == again.at(r, c));

  // Matches attention over the truncated sequence.
  Tensor prefix = Tensor::matrix(4, 3 * hidden);
  for (std::size_t r = 0; r < 4; ++r) std::copy(qkv.row(r).begin(), qkv.row(r).end(), prefix.row(r).begin());
  Tape t3;
  const Tensor truncated = masked_attention(t3.constant(prefix), heads).value();
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < hidden; ++c) CHECK(full.at(r, c) == doctest::Approx(truncated.at(r, c)).epsilon(1e-14));
}

TEST_CASE("l2_normalize yields unit rows and flags zero rows") {
  Tape tape;
  Tensor x = Tensor::matrix(2, 3);
  x.at(0, 0) = 3.0;
  x.at(0, 1) = 4.0;
  Var y = l2_normalize(tape.constant(x));
  CHECK(y.value().at(0, 0) == doctest::Approx(0.6));
  CHECK(y.value().at(1, 2) == 0.0);
  CHECK(tape.diagnostics().size() == 1);
}

TEST_CASE("adam: first step moves each coordinate by about lr against the gradient sign") {
  ParameterStore store;
  store.add("w", Tensor::vector({1.0, -2.0, 0.5}));
  GradMap g{{"w", Tensor::vector({0.3, -4.0, 0.0})}};
  OptimizerConfig cfg;
  cfg.base_lr = 0.01;
  adam_step(store, g, cfg, 0);
  const Tensor& w = store.value("w");
  CHECK(w[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)));
  CHECK(w[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)));
  CHECK(w[2] == 0.5);
  CHECK(store.adam("w").steps == 1);
  CHECK_THROWS_AS(adam_step(store, GradMap{}, cfg, 1), StateError);
}

TEST_CASE("adam: zero learning rate leaves parameters bit-identical") {
  ParameterStore store;
  std::mt19937_64 rng(1);
  store.add("a", random_tensor({3, 4}, rng));
  const ParameterStore before = store;
  OptimizerConfig cfg;
  cfg.base_lr = 0.0;
  adam_step(store, GradMap{{"a", random_tensor({3, 4}, rng)}}, cfg, 0);
  CHECK(store.value("a") == before.value("a"));
}

TEST_CASE("step decay schedule") {
  OptimizerConfig cfg;
  CHECK(lr_at(0, cfg) == 4e-5);
  CHECK(lr_at(39999, cfg) == 4e-5);
  CHECK(lr_at(40000, cfg) == doctest::Approx(4e-5 * 0.9));
  CHECK(lr_at(80000, cfg) == doctest::Approx(4e-5 * 0.81));
  cfg.decay_factor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("parameter gradients through the store match finite differences") {
  ParameterStore store;
  std::mt19937_64 rng(11);
  store.add("w", random_tensor({3, 2}, rng));
  store.add("b", random_tensor({2}, rng));
  const Tensor x = random_tensor({4, 3}, rng);
  const GradCheckReport r = check_parameter_gradients(store, [&](Tape& tape) {
    return sum(gelu(linear(tape.constant(x), store.bind(tape, "w"), store.bind(tape, "b"))));
  });
  CHECK(r.coordinates == 8);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("checkpoint round trip and corruption detection") {
  Checkpoint c;
  c.config_json = R"({"x":1})";
  c.global_step = 77;
  c.rng_state = "1 2 3";
  std::mt19937_64 rng(3);
  c.params.add("layer/w", random_tensor({2, 5}, rng));
  c.params.add("layer/b", random_tensor({5}, rng));
  c.params.adam("layer/w").steps = 4;
  c.params.adam("layer/w").first_moment = random_tensor({2, 5}, rng);

  const auto bytes = serialize_checkpoint(c);
  const Checkpoint back = parse_checkpoint(bytes);
  CHECK(back.config_json == c.config_json);
  CHECK(back.global_step == 77);
  CHECK(back.rng_state == c.rng_state);
  CHECK(back.params == c.params);
  CHECK(serialize_checkpoint(back) == bytes);

  auto corrupt = bytes;
  corrupt[corrupt.size() / 2] ^= 0x40;
  CHECK_THROWS_AS(parse_checkpoint(corrupt), LoadError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK_THROWS_AS(parse_checkpoint(truncated), LoadError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bad_magic), LoadError);

  const auto path = std::filesystem::temp_directory_path() / "mulan_test_ckpt.bin";
  save_checkpoint(path, c);
  CHECK(load_checkpoint(path).params == c.params);
  CHECK(file_digest(path).size() == 8);
  std::filesystem::remove(path);
}

TEST_CASE("crc32 of a known string") {
  const std::string s = "123456789";
  CHECK(crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
}

TEST_CASE("logistic regression separates a separable set and is invariant to duplication") {
  std::vector<double> x = {2, 1, 3, 2, 2.5, 0, -2, 0, -3, 1, -1, -2};
  std::vector<int> y = {1, 1, 1, 0, 0, 0};
  LogisticConfig cfg;
  const LogisticModel m = fit_logistic(x, 2, y, cfg);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = m.probability(std::span<const double>(x).subspan(2 * i, 2));
    CHECK((p > 0.5) == (y[i] == 1));
  }
  std::vector<double> x2 = x;
  x2.insert(x2.end(), x.begin(), x.end());
  std::vector<int> y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  const LogisticModel m2 = fit_logistic(x2, 2, y2, cfg);
  for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(m.weights[j] - m2.weights[j]) < 1e-9);
  CHECK(std::abs(m.bias - m2.bias) < 1e-9);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
}
