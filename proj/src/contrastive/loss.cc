// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/contrastive/loss.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mulan/error.h"
#include "mulan/simd/kernels.h"

namespace mulan::contrastive {
namespace {

using nn::Tape;
using nn::Tensor;
using nn::Var;

struct LossTerms {
  double loss = 0.0;
  Tensor g;  // dL/dS where S = A T^T / tau
};

// S[i][j] = a_i . t_j / tau; the loss in S and its gradient.
LossTerms evaluate(const Tensor& s, Denominator denominator) {
  const std::size_t b = s.rows();
  LossTerms out{0.0, Tensor::matrix(b, b)};
  std::vector<double> terms;
  for (std::size_t i = 0; i < b; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      m = std::max({m, s.at(i, j), s.at(j, i)});
    }
    const bool inclusive = denominator == Denominator::kInclusive;
    if (inclusive) m = std::max(m, s.at(i, i));
    double z = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      z += std::exp(s.at(i, j) - m) + std::exp(s.at(j, i) - m);
    }
    if (inclusive) z += 2.0 * std::exp(s.at(i, i) - m);
    const double lse = m + std::log(z);
    out.loss += lse - s.at(i, i);
    out.g.at(i, i) -= 1.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      out.g.at(i, j) += std::exp(s.at(i, j) - lse);
      out.g.at(j, i) += std::exp(s.at(j, i) - lse);
    }
    if (inclusive) out.g.at(i, i) += 2.0 * std::exp(s.at(i, i) - lse);
  }
  return out;
}

void check_batch(const Tensor& audio, const Tensor& text) {
  if (audio.rank() != 2 || text.rank() != 2 || audio.shape() != text.shape()) {
    throw BatchError("cmc_loss needs audio and text batches of equal [B, d] shape, got " +
                     nn::shape_string(audio.shape()) + " and " + nn::shape_string(text.shape()));
  }
  if (audio.rows() < 2) {
    throw BatchError("cmc_loss needs B >= 2; the denominator would be an empty sum");
  }
}

Tensor similarities(const Tensor& audio, const Tensor& text, double tau) {
  const std::size_t b = audio.rows();
  const std::size_t d = audio.cols();
  Tensor s = Tensor::matrix(b, b);
  simd::active().gemm_nt(b, b, d, audio.raw(), text.raw(), s.raw());
  for (double& v : s.data()) v /= tau;
  return s;
}

}  // namespace

Denominator parse_denominator(const std::string& name) {
  if (name == "exclusive") return Denominator::kExclusive;
  if (name == "inclusive") return Denominator::kInclusive;
  throw ConfigError("loss.denominator must be exclusive or inclusive, got '" + name + "'");
}

std::string denominator_name(Denominator d) {
  return d == Denominator::kExclusive ? "exclusive" : "inclusive";
}

void LossConfig::validate() const {
  if (!(tau_min > 0.0 && tau_min <= 1.0)) throw ConfigError("loss.tau_min must lie in (0, 1]");
  if (!(tau_init >= tau_min && tau_init <= 1.0)) {
    throw ConfigError("loss.tau_init must lie in [tau_min, 1]");
  }
}

double critic(std::span<const double> a, std::span<const double> b, double tau) {
  if (a.size() != b.size()) throw ArgumentError("critic of embeddings with different sizes");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::exp(dot / tau);
}

double tau_of(double theta, double tau_min) { return std::clamp(std::exp(theta), tau_min, 1.0); }

Var temperature(Var theta, double tau_min) {
  if (theta.value().size() != 1) throw GraphError("temperature: theta must be a scalar");
  const double raw = std::exp(theta.value().item());
  const double tau = std::clamp(raw, tau_min, 1.0);
  const bool active = raw >= tau_min && raw <= 1.0;
  const int ti = theta.id();
  return theta.tape().record("temperature", Tensor::scalar(tau), {theta},
                             [=](Tape& t, int yi) {
                               if (!t.requires_grad(ti) || !active) return;
                               t.grad(ti)[0] += t.grad(yi)[0] * raw;
                             });
}

Var cmc_loss(Var audio, Var text, Var tau, Denominator denominator) {
  const Tensor& a = audio.value();
  const Tensor& x = text.value();
  check_batch(a, x);
  if (tau.value().size() != 1 || !(tau.value().item() > 0.0)) {
    throw GraphError("cmc_loss: tau must be a positive scalar");
  }
  const double tv = tau.value().item();
  const Tensor s = similarities(a, x, tv);
  LossTerms terms = evaluate(s, denominator);
  const int ai = audio.id();
  const int xi = text.id();
  const int ti = tau.id();
  return audio.tape().record(
      "cmc_loss", Tensor::scalar(terms.loss), {audio, text, tau},
      [=, g = std::move(terms.g), s = s](Tape& t, int yi) {
        const double gy = t.grad(yi)[0];
        const std::size_t b = g.rows();
        const std::size_t d = t.value(ai).cols();
        Tensor gs = g;
        for (double& v : gs.data()) v *= gy / tv;
        const auto& kern = simd::active();
        if (t.requires_grad(ai)) kern.gemm_nn(b, d, b, gs.raw(), t.value(xi).raw(), t.grad(ai).raw());
        if (t.requires_grad(xi)) kern.gemm_tn(b, d, b, gs.raw(), t.value(ai).raw(), t.grad(xi).raw());
        if (t.requires_grad(ti)) {
          double acc = 0.0;
          for (std::size_t k = 0; k < g.size(); ++k) acc += g[k] * s[k];
          t.grad(ti)[0] += -gy * acc / tv;
        }
      });
}

double cmc_loss_value(const Tensor& audio, const Tensor& text, double tau, Denominator denominator) {
  check_batch(audio, text);
  return evaluate(similarities(audio, text, tau), denominator).loss;
}

void update_temperature(TemperatureParam& param, double grad, const nn::OptimizerConfig& cfg,
                        double lr) {
  Tensor value = Tensor::scalar(param.theta);
  nn::adam_update(value, param.slot, Tensor::scalar(grad), cfg, lr);
  param.theta = std::clamp(value.item(), std::log(param.tau_min), 0.0);
}

void clamp_log_tau(nn::ParameterStore& store, double tau_min) {
  double& theta = store.value(kLogTauName)[0];
  theta = std::clamp(theta, std::log(tau_min), 0.0);
}

}  // namespace mulan::contrastive
