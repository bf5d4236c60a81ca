// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_CONTRASTIVE_LOSS_H_
#define MULAN_CONTRASTIVE_LOSS_H_

#include <span>
#include <string>

#include "mulan/nn/adam.h"
#include "mulan/nn/parameter_store.h"
#include "mulan/nn/tape.h"

namespace mulan::contrastive {

inline constexpr const char* kLogTauName = "loss/log_tau";

enum class Denominator { kExclusive, kInclusive };

Denominator parse_denominator(const std::string& name);
std::string denominator_name(Denominator d);

struct LossConfig {
  Denominator denominator = Denominator::kExclusive;
  double tau_init = 0.1;
  double tau_min = 1e-3;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

// h[a, b] = exp(a.b / tau) for unit-norm a, b.
double critic(std::span<const double> a, std::span<const double> b, double tau);

// tau = clamp(exp(theta), tau_min, 1).
double tau_of(double theta, double tau_min);

// Differentiable tau from a scalar theta. The gradient is exp(theta) while
// the clamp is inactive and zero once it binds.
nn::Var temperature(nn::Var theta, double tau_min);

// Batch-summed cross-modal contrastive loss over rows of audio [B, d] and
// text [B, d]: sum_i -log(h_ii / D_i), where D_i sums h(a_i, t_j) + h(a_j, t_i)
// over j != i (exclusive) and additionally 2 h_ii (inclusive). Evaluated in
// log space. Throws BatchError for B < 2.
nn::Var cmc_loss(nn::Var audio, nn::Var text, nn::Var tau, Denominator denominator);

// Tensor-only evaluation of the same loss.
double cmc_loss_value(const nn::Tensor& audio, const nn::Tensor& text, double tau,
                      Denominator denominator);

// Scalar temperature parameter with its own optimizer slot.
struct TemperatureParam {
  double theta = 0.0;
  double tau_min = 1e-3;
  nn::AdamSlot slot;

  double tau() const { return tau_of(theta, tau_min); }
};

// One optimizer update of theta, then theta is clamped into
// [log tau_min, 0] so tau stays in [tau_min, 1].
void update_temperature(TemperatureParam& param, double grad, const nn::OptimizerConfig& cfg,
                        double lr);

// Clamps the stored log-temperature after a shared optimizer step.
void clamp_log_tau(nn::ParameterStore& store, double tau_min);

}  // namespace mulan::contrastive

#endif  // MULAN_CONTRASTIVE_LOSS_H_
