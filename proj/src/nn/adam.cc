// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/nn/adam.h"

#include <cmath>
#include <string>

#include "mulan/error.h"

namespace mulan::nn {

void OptimizerConfig::validate() const {
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) throw ConfigError("optimizer.base_lr must be >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw ConfigError("optimizer.decay_factor must lie in (0, 1]");
  }
  if (decay_every_steps < 1) throw ConfigError("optimizer.decay_every_steps must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("optimizer.epsilon must be > 0");
}

double lr_at(std::uint64_t step, const OptimizerConfig& cfg) {
  const std::uint64_t decays = step / cfg.decay_every_steps;
  return cfg.base_lr * std::pow(cfg.decay_factor, static_cast<double>(decays));
}

void adam_step(ParameterStore& params, const GradMap& grads, const OptimizerConfig& cfg,
               std::uint64_t global_step) {
  for (const std::string& name : params.names()) {
    if (!grads.count(name)) throw StateError("missing gradient for parameter " + name);
    if (grads.at(name).shape() != params.value(name).shape()) {
      throw StateError("gradient shape mismatch for parameter " + name);
    }
  }
  const double lr = lr_at(global_step, cfg);
  for (const std::string& name : params.names()) {
    adam_update(params.value(name), params.adam(name), grads.at(name), cfg, lr);
  }
}

void adam_update(Tensor& w, AdamSlot& slot, const Tensor& g, const OptimizerConfig& cfg,
                 double lr) {
  if (g.shape() != w.shape()) throw StateError("gradient shape mismatch in adam_update");
  if (slot.first_moment.shape() != w.shape()) {
    slot.first_moment = Tensor(w.shape());
    slot.second_moment = Tensor(w.shape());
  }
  slot.steps += 1;
  const double t = static_cast<double>(slot.steps);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    double& m = slot.first_moment[i];
    double& v = slot.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[i];
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace mulan::nn
