// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mulan/error.h"

namespace mulan::eval {
namespace {

double cos_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("cosine of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

bool both_labels(const std::vector<int>& y) {
  const bool pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool neg = std::find(y.begin(), y.end(), 0) != y.end();
  return pos && neg;
}

std::vector<int> column(const LabelMatrix& m, std::size_t c) {
  std::vector<int> out;
  for (const auto& row : m) out.push_back(row.at(c));
  return out;
}

double mean_of_finite(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++n;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("auc_roc: scores and labels differ in length");
  // Rank-sum form of the Mann-Whitney statistic with average ranks for ties.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] != 0 && labels[order[t]] != 1) throw ArgumentError("auc_roc: labels must be 0 or 1");
      if (labels[order[t]] == 1) {
        pos_rank_sum += avg_rank;
        ++npos;
      }
    }
    i = j;
  }
  const std::size_t nneg = scores.size() - npos;
  if (npos == 0 || nneg == 0) throw ArgumentError("auc_roc: need at least one positive and one negative");
  const double np = static_cast<double>(npos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(nneg));
}

ClassReport auc_roc_class_balanced(const Matrix& scores, const LabelMatrix& labels) {
  if (scores.size() != labels.size()) throw ArgumentError("score and label matrices differ in rows");
  const std::size_t classes = scores.empty() ? 0 : scores[0].size();
  ClassReport report;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> s;
    for (const auto& row : scores) {
      if (row.size() != classes) throw ArgumentError("ragged score matrix");
      s.push_back(row[c]);
    }
    const std::vector<int> y = column(labels, c);
    if (!both_labels(y)) {
      report.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      report.skipped.push_back(c);
      continue;
    }
    report.per_class.push_back(auc_roc(s, y));
  }
  report.macro = mean_of_finite(report.per_class);
  return report;
}

namespace {

// Extended precision so that short hand-checkable cases round once.
double precision_mean(std::span<const int> ranked_relevance, std::size_t relevant) {
  long double sum = 0.0L;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked_relevance.size(); ++r) {
    if (!ranked_relevance[r]) continue;
    ++hits;
    sum += static_cast<long double>(hits) / static_cast<long double>(r + 1);
  }
  return relevant ? static_cast<double>(sum / static_cast<long double>(relevant)) : 0.0;
}

}  // namespace

double average_precision(std::span<const int> ranked_relevance) {
  const auto hits = std::count_if(ranked_relevance.begin(), ranked_relevance.end(), [](int v) { return v != 0; });
  return precision_mean(ranked_relevance, static_cast<std::size_t>(hits));
}

double mean_average_precision(const std::vector<std::vector<std::string>>& ranked,
                              const std::vector<std::set<std::string>>& targets,
                              std::vector<double>* per_query) {
  if (ranked.size() != targets.size()) throw ArgumentError("rankings and targets differ in count");
  if (ranked.empty()) throw ArgumentError("mean_average_precision needs at least one query");
  double total = 0.0;
  for (std::size_t q = 0; q < ranked.size(); ++q) {
    if (targets[q].empty()) throw ArgumentError("query without targets");
    std::vector<int> relevance(ranked[q].size());
    for (std::size_t r = 0; r < ranked[q].size(); ++r) relevance[r] = targets[q].count(ranked[q][r]) ? 1 : 0;
    const double ap = precision_mean(relevance, targets[q].size());
    if (per_query) per_query->push_back(ap);
    total += ap;
  }
  return total / static_cast<double>(ranked.size());
}

Matrix cosine_scores(const std::vector<std::vector<double>>& items,
                     const std::vector<std::vector<double>>& queries) {
  Matrix out(items.size(), std::vector<double>(queries.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t q = 0; q < queries.size(); ++q) out[i][q] = cos_sim(items[i], queries[q]);
  }
  return out;
}

std::vector<Hit> retrieve(std::span<const double> query, const std::vector<std::string>& ids,
                          const std::vector<std::vector<double>>& vectors, std::size_t k) {
  if (k == 0) throw ArgumentError("retrieve: k must be positive");
  if (ids.empty()) throw ArgumentError("retrieve: empty index");
  if (ids.size() != vectors.size()) throw ArgumentError("retrieve: ids and vectors differ in count");
  std::vector<Hit> hits;
  hits.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) hits.push_back({ids[i], cos_sim(query, vectors[i])});
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

double triplet_accuracy(const std::vector<TripletEmbeddings>& triplets) {
  if (triplets.empty()) throw ArgumentError("triplet_accuracy needs at least one triplet");
  std::size_t correct = 0;
  for (const auto& t : triplets) correct += cos_sim(t.anchor, t.pos) > cos_sim(t.anchor, t.neg);
  return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

ClassReport linear_probe(const std::vector<std::vector<double>>& train_x, const LabelMatrix& train_y,
                         const std::vector<std::vector<double>>& eval_x, const LabelMatrix& eval_y,
                         const nn::LogisticConfig& cfg) {
  if (train_x.size() != train_y.size() || eval_x.size() != eval_y.size()) {
    throw ArgumentError("linear_probe: feature and label counts differ");
  }
  if (train_x.empty() || eval_x.empty()) throw ArgumentError("linear_probe: empty split");
  const std::size_t dim = train_x[0].size();
  const std::size_t classes = train_y[0].size();
  std::vector<double> flat;
  for (const auto& x : train_x) {
    if (x.size() != dim) throw ArgumentError("linear_probe: ragged features");
    flat.insert(flat.end(), x.begin(), x.end());
  }
  ClassReport report;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::vector<int> ytr = column(train_y, c);
    const std::vector<int> yev = column(eval_y, c);
    if (!both_labels(ytr) || !both_labels(yev)) {
      report.per_class.push_back(std::numeric_limits<double>::quiet_NaN());
      report.skipped.push_back(c);
      continue;
    }
    const nn::LogisticModel model = nn::fit_logistic(flat, dim, ytr, cfg);
    std::vector<double> scores;
    for (const auto& x : eval_x) scores.push_back(model.logit(x));
    report.per_class.push_back(auc_roc(scores, yev));
  }
  report.macro = mean_of_finite(report.per_class);
  return report;
}

}  // namespace mulan::eval
