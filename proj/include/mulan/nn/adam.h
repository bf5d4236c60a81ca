// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_NN_ADAM_H_
#define MULAN_NN_ADAM_H_

#include <cstdint>

#include "mulan/nn/parameter_store.h"

namespace mulan::nn {

struct OptimizerConfig {
  double base_lr = 4e-5;
  double decay_factor = 0.9;
  std::uint64_t decay_every_steps = 40000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

// Step-decay schedule: base_lr * decay_factor^floor(step / decay_every_steps).
double lr_at(std::uint64_t step, const OptimizerConfig& cfg);

// One bias-corrected Adam update of a single tensor at learning rate `lr`;
// advances the slot's step counter.
void adam_update(Tensor& value, AdamSlot& slot, const Tensor& grad, const OptimizerConfig& cfg,
                 double lr);

// One bias-corrected Adam update of every parameter in `params`, at the
// learning rate lr_at(global_step). Each parameter's own step counter is
// advanced. Throws StateError if `grads` lacks an entry for some parameter.
void adam_step(ParameterStore& params, const GradMap& grads, const OptimizerConfig& cfg,
               std::uint64_t global_step);

}  // namespace mulan::nn

#endif  // MULAN_NN_ADAM_H_
