// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_TEXT_FILTERS_H_
#define MULAN_TEXT_FILTERS_H_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mulan/nn/logistic_regression.h"
#include "mulan/text/vocabulary.h"

namespace mulan::text {

// Rule-based cleanup for short-form annotations. Lengths count
// whitespace-separated words; patterns match case-insensitively as substrings.
struct FilterRuleSet {
  std::optional<std::size_t> min_tokens;
  std::optional<std::size_t> max_tokens;
  std::vector<std::string> forbidden_patterns;
  bool deduplicate = false;

  void validate() const;
};

// Order-preserving subset of `annotations` that passes every rule.
std::vector<std::string> apply_sf_rules(const std::vector<std::string>& annotations,
                                        const FilterRuleSet& rules);

using LabeledSentence = std::pair<std::string, bool>;

// Linear model over wordpiece-count features deciding whether a sentence
// describes music.
class DescriptivenessClassifier {
 public:
  DescriptivenessClassifier(std::shared_ptr<const Vocabulary> vocab, nn::LogisticModel model,
                            double threshold = 0.5);

  double logit(std::string_view sentence) const;
  double probability(std::string_view sentence) const;
  // probability >= threshold, decided in logit space so a threshold of 1 is
  // never met and 0 is always met.
  bool keep(std::string_view sentence) const;

  double threshold() const { return threshold_; }
  void set_threshold(double threshold);
  const nn::LogisticModel& model() const { return model_; }

 private:
  std::vector<double> features(std::string_view sentence) const;

  std::shared_ptr<const Vocabulary> vocab_;
  nn::LogisticModel model_;
  double threshold_;
};

struct TrainedClassifier {
  DescriptivenessClassifier classifier;
  double training_accuracy;
};

// Regularised logistic regression by full-batch gradient descent.
// Throws TrainingError unless both labels are present.
TrainedClassifier train_descriptiveness_classifier(const std::vector<LabeledSentence>& labeled,
                                                   std::shared_ptr<const Vocabulary> vocab,
                                                   const nn::LogisticConfig& cfg = {});

// Order-preserving subset of sentences the classifier keeps.
std::vector<std::string> filter_lf(const std::vector<std::string>& sentences,
                                   const DescriptivenessClassifier& clf);

// Splits a long-form block at '.', '!' and '?'; trims whitespace, drops empties.
std::vector<std::string> split_sentences(std::string_view block);

// UTF-8 TSV, one "text<TAB>0|1" per line.
std::vector<LabeledSentence> read_labeled_tsv(const std::filesystem::path& path);
void write_labeled_tsv(const std::filesystem::path& path, const std::vector<LabeledSentence>& rows);

}  // namespace mulan::text

#endif  // MULAN_TEXT_FILTERS_H_
