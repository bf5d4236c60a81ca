// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/nn/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "mulan/error.h"

namespace mulan::nn {
namespace {

void record(GradCheckReport& report, double analytic, double numeric, double floor,
            const std::string& where) {
  const double abs_err = std::abs(analytic - numeric);
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  const double rel = abs_err / denom;
  report.coordinates += 1;
  report.max_abs_error = std::max(report.max_abs_error, abs_err);
  if (rel > report.max_rel_error || report.worst.empty()) {
    report.max_rel_error = rel;
    report.worst = where;
  }
}

double scalar_of(const Var& v) {
  if (v.value().size() != 1) throw GraphError("gradient check needs a scalar output");
  return v.value().item();
}

}  // namespace

GradCheckReport check_gradients(const InputGraph& build, const std::vector<Tensor>& inputs,
                                const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  double floor = options.floor;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
    Var out = build(tape, vars);
    scalar_of(out);
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(v.grad());
    floor = options.floor * std::max(1.0, std::abs(out.value().item()));
  }
  auto evaluate = [&](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : xs) vars.push_back(tape.constant(t));
    return scalar_of(build(tape, vars));
  };
  GradCheckReport report;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    for (std::size_t j = 0; j < probe[i].size(); ++j) {
      const double x0 = probe[i][j];
      probe[i][j] = x0 + options.step;
      const double up = evaluate(probe);
      probe[i][j] = x0 - options.step;
      const double down = evaluate(probe);
      probe[i][j] = x0;
      const double numeric = (up - down) / (2.0 * options.step);
      record(report, analytic[i][j], numeric, floor,
             "input" + std::to_string(i) + "[" + std::to_string(j) + "]");
    }
  }
  return report;
}

GradCheckReport check_parameter_gradients(ParameterStore& params,
                                          const std::function<Var(Tape&)>& build,
                                          const GradCheckOptions& options) {
  GradMap analytic;
  double floor = options.floor;
  {
    Tape tape;
    Var out = build(tape);
    scalar_of(out);
    tape.backward(out);
    accumulate_grads(analytic, tape.parameter_grads());
    floor = options.floor * std::max(1.0, std::abs(out.value().item()));
  }
  auto evaluate = [&] {
    Tape tape;
    return scalar_of(build(tape));
  };
  GradCheckReport report;
  for (const std::string& name : params.names()) {
    Tensor& w = params.value(name);
    const Tensor zero(w.shape());
    const Tensor& g = analytic.count(name) ? analytic.at(name) : zero;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double x0 = w[j];
      w[j] = x0 + options.step;
      const double up = evaluate();
      w[j] = x0 - options.step;
      const double down = evaluate();
      w[j] = x0;
      const double numeric = (up - down) / (2.0 * options.step);
      record(report, g[j], numeric, floor, name + "[" + std::to_string(j) + "]");
    }
  }
  return report;
}

}  // namespace mulan::nn
