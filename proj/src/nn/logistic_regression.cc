// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/nn/logistic_regression.h"

#include <cmath>

#include "mulan/error.h"
#include "mulan/simd/kernels.h"

namespace mulan::nn {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LogisticModel::logit(std::span<const double> x) const {
  return simd::active().dot(weights.data(), x.data(), weights.size()) + bias;
}

double LogisticModel::probability(std::span<const double> x) const { return sigmoid(logit(x)); }

LogisticModel fit_logistic(std::span<const double> features, std::size_t dim,
                           std::span<const int> labels, const LogisticConfig& cfg) {
  const std::size_t n = labels.size();
  if (features.size() != n * dim) throw ArgumentError("fit_logistic: feature matrix size mismatch");
  if (n == 0) throw ArgumentError("fit_logistic: no examples");
  LogisticModel model;
  model.weights.assign(dim, 0.0);
  std::vector<double> grad(dim);
  const auto& kern = simd::active();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = features.data() + i * dim;
      const double residual =
          sigmoid(kern.dot(model.weights.data(), x, dim) + model.bias) - (labels[i] ? 1.0 : 0.0);
      kern.axpy(residual, x, grad.data(), dim);
      grad_bias += residual;
    }
    for (std::size_t j = 0; j < dim; ++j) {
      model.weights[j] -= cfg.learning_rate * (grad[j] * inv_n + cfg.l2 * model.weights[j]);
    }
    model.bias -= cfg.learning_rate * grad_bias * inv_n;
  }
  return model;
}

}  // namespace mulan::nn
