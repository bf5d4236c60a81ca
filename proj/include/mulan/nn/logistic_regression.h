// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_NN_LOGISTIC_REGRESSION_H_
#define MULAN_NN_LOGISTIC_REGRESSION_H_

#include <cstddef>
#include <span>
#include <vector>

namespace mulan::nn {

struct LogisticConfig {
  double l2 = 1e-4;
  int epochs = 500;
  double learning_rate = 0.1;
};

// Binary logistic model p(y = 1 | x) = sigmoid(w.x + b).
struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;

  double logit(std::span<const double> x) const;
  double probability(std::span<const double> x) const;
};

// Full-batch gradient descent from zero on the mean log-loss plus
// (l2 / 2) * |w|^2 (bias unregularised). Using the mean makes the fit
// invariant to duplicating the data set. `features` is row-major
// [labels.size(), dim].
LogisticModel fit_logistic(std::span<const double> features, std::size_t dim,
                           std::span<const int> labels, const LogisticConfig& cfg);

double sigmoid(double z);

}  // namespace mulan::nn

#endif  // MULAN_NN_LOGISTIC_REGRESSION_H_
