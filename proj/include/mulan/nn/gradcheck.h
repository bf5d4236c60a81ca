// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_NN_GRADCHECK_H_
#define MULAN_NN_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mulan/nn/parameter_store.h"
#include "mulan/nn/tape.h"

namespace mulan::nn {

// Central finite differences against reverse-mode gradients. Relative error
// per coordinate is |analytic - numeric| / max(|analytic|, |numeric|, floor),
// where floor = options.floor * max(1, |f(x)|). The floor tracks the output
// scale because central-difference round-off grows with |f|.
struct GradCheckOptions {
  double step = 1e-5;
  double floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "<input>[index]" of the largest relative error
};

using InputGraph = std::function<Var(Tape&, std::span<const Var>)>;

// `build` receives one trainable Var per input tensor and returns a scalar.
GradCheckReport check_gradients(const InputGraph& build, const std::vector<Tensor>& inputs,
                                 const GradCheckOptions& options = {});

// Same check over every coordinate of every parameter in `params`. `build`
// must bind parameters through ParameterStore::bind on the tape it receives.
GradCheckReport check_parameter_gradients(ParameterStore& params,
                                          const std::function<Var(Tape&)>& build,
                                          const GradCheckOptions& options = {});

}  // namespace mulan::nn

#endif  // MULAN_NN_GRADCHECK_H_
