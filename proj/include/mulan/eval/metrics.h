// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_EVAL_METRICS_H_
#define MULAN_EVAL_METRICS_H_

#include <set>
#include <span>
#include <string>
#include <vector>

#include "mulan/nn/logistic_regression.h"

namespace mulan::eval {

using Matrix = std::vector<std::vector<double>>;  // rows = items
using LabelMatrix = std::vector<std::vector<int>>;

// Mann-Whitney AUC: fraction of (positive, negative) pairs ordered correctly,
// ties counting one half. Throws ArgumentError unless both labels occur.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

struct ClassReport {
  std::vector<double> per_class;         // NaN where skipped
  std::vector<std::size_t> skipped;      // classes lacking a positive or a negative
  double macro = 0.0;                    // unweighted mean over scored classes
};

// Per-column AUC of scores[item][class] against labels[item][class], then the
// unweighted mean over columns that have both labels.
ClassReport auc_roc_class_balanced(const Matrix& scores, const LabelMatrix& labels);

// Mean over relevant positions r (1-based) of (relevant items at rank <= r) / r.
double average_precision(std::span<const int> ranked_relevance);

// Per query AP of `ranked` ids against `targets`; targets missing from the
// ranking contribute precision 0. Returns the mean over queries.
double mean_average_precision(const std::vector<std::vector<std::string>>& ranked,
                              const std::vector<std::set<std::string>>& targets,
                              std::vector<double>* per_query = nullptr);

// Cosine of every item against every query: result[item][query].
Matrix cosine_scores(const std::vector<std::vector<double>>& items,
                     const std::vector<std::vector<double>>& queries);

struct Hit {
  std::string id;
  double score = 0.0;
};

// Pool sorted by descending cosine to `query`, ties by ascending id, top k.
// Throws ArgumentError for k == 0 or an empty pool.
std::vector<Hit> retrieve(std::span<const double> query, const std::vector<std::string>& ids,
                          const std::vector<std::vector<double>>& vectors, std::size_t k);

struct TripletEmbeddings {
  std::vector<double> anchor, pos, neg;
};

// Fraction with cos(anchor, pos) > cos(anchor, neg); exact ties are wrong.
double triplet_accuracy(const std::vector<TripletEmbeddings>& triplets);

// One logistic regression per class on frozen features, scored by AUC on the
// eval split. Classes without both labels in train or eval are skipped.
ClassReport linear_probe(const std::vector<std::vector<double>>& train_x, const LabelMatrix& train_y,
                         const std::vector<std::vector<double>>& eval_x, const LabelMatrix& eval_y,
                         const nn::LogisticConfig& cfg = {});

}  // namespace mulan::eval

#endif  // MULAN_EVAL_METRICS_H_
