// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/text/filters.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "mulan/error.h"
#include "mulan/text/tokenizer.h"

namespace mulan::text {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t word_count(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void FilterRuleSet::validate() const {
  if (min_tokens && max_tokens && *min_tokens > *max_tokens) {
    throw ConfigError("filter rules: min_tokens exceeds max_tokens");
  }
}

std::vector<std::string> apply_sf_rules(const std::vector<std::string>& annotations,
                                        const FilterRuleSet& rules) {
  rules.validate();
  std::vector<std::string> patterns;
  for (const auto& p : rules.forbidden_patterns) patterns.push_back(lower(p));
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& a : annotations) {
    const std::size_t n = word_count(a);
    if (rules.min_tokens && n < *rules.min_tokens) continue;
    if (rules.max_tokens && n > *rules.max_tokens) continue;
    const std::string low = lower(a);
    const bool forbidden = std::any_of(patterns.begin(), patterns.end(), [&](const auto& p) {
      return !p.empty() && low.find(p) != std::string::npos;
    });
    if (forbidden) continue;
    if (rules.deduplicate && !seen.insert(a).second) continue;
    out.push_back(a);
  }
  return out;
}

DescriptivenessClassifier::DescriptivenessClassifier(std::shared_ptr<const Vocabulary> vocab,
                                                     nn::LogisticModel model, double threshold)
    : vocab_(std::move(vocab)), model_(std::move(model)), threshold_(0.5) {
  if (!vocab_) throw ArgumentError("classifier needs a vocabulary");
  if (model_.weights.size() != vocab_->size()) {
    throw ArgumentError("classifier weights do not match vocabulary size");
  }
  for (double w : model_.weights) {
    if (!std::isfinite(w)) throw NumericError("classifier weights must be finite");
  }
  set_threshold(threshold);
}

void DescriptivenessClassifier::set_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("classifier threshold must lie in [0, 1]");
  }
  threshold_ = threshold;
}

std::vector<double> DescriptivenessClassifier::features(std::string_view sentence) const {
  std::vector<double> x(vocab_->size(), 0.0);
  for (int id : wordpiece_ids(sentence, *vocab_)) x[static_cast<std::size_t>(id)] += 1.0;
  return x;
}

double DescriptivenessClassifier::logit(std::string_view sentence) const {
  return model_.logit(features(sentence));
}

double DescriptivenessClassifier::probability(std::string_view sentence) const {
  return nn::sigmoid(logit(sentence));
}

bool DescriptivenessClassifier::keep(std::string_view sentence) const {
  if (threshold_ <= 0.0) return true;
  if (threshold_ >= 1.0) return false;
  return logit(sentence) >= std::log(threshold_ / (1.0 - threshold_));
}

TrainedClassifier train_descriptiveness_classifier(const std::vector<LabeledSentence>& labeled,
                                                   std::shared_ptr<const Vocabulary> vocab,
                                                   const nn::LogisticConfig& cfg) {
  if (!vocab) throw ArgumentError("classifier needs a vocabulary");
  const bool has_pos = std::any_of(labeled.begin(), labeled.end(), [](auto& l) { return l.second; });
  const bool has_neg = std::any_of(labeled.begin(), labeled.end(), [](auto& l) { return !l.second; });
  if (!has_pos || !has_neg) {
    throw TrainingError("descriptiveness classifier needs both positive and negative examples");
  }
  const std::size_t dim = vocab->size();
  std::vector<double> features(labeled.size() * dim, 0.0);
  std::vector<int> labels(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    for (int id : wordpiece_ids(labeled[i].first, *vocab)) {
      features[i * dim + static_cast<std::size_t>(id)] += 1.0;
    }
    labels[i] = labeled[i].second ? 1 : 0;
  }
  DescriptivenessClassifier clf(vocab, nn::fit_logistic(features, dim, labels, cfg));
  std::size_t correct = 0;
  for (const auto& [sentence, label] : labeled) correct += clf.keep(sentence) == label;
  return {std::move(clf), static_cast<double>(correct) / static_cast<double>(labeled.size())};
}

std::vector<std::string> filter_lf(const std::vector<std::string>& sentences,
                                   const DescriptivenessClassifier& clf) {
  std::vector<std::string> out;
  for (const auto& s : sentences) {
    if (clf.keep(s)) out.push_back(s);
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view block) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= block.size(); ++i) {
    if (i == block.size() || block[i] == '.' || block[i] == '!' || block[i] == '?') {
      const std::size_t end = i < block.size() ? i + 1 : i;
      std::string s = trim(block.substr(start, end - start));
      if (!s.empty() && s.find_first_not_of(".!?") != std::string::npos) out.push_back(std::move(s));
      start = end;
    }
  }
  return out;
}

std::vector<LabeledSentence> read_labeled_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<LabeledSentence> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": missing TAB");
    }
    const std::string label = line.substr(tab + 1);
    if (label != "0" && label != "1") {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    rows.emplace_back(line.substr(0, tab), label == "1");
  }
  return rows;
}

void write_labeled_tsv(const std::filesystem::path& path, const std::vector<LabeledSentence>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [text, label] : rows) out << text << '\t' << (label ? 1 : 0) << '\n';
}

}  // namespace mulan::text
