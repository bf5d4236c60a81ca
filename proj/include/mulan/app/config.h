// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_APP_CONFIG_H_
#define MULAN_APP_CONFIG_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "mulan/contrastive/loss.h"
#include "mulan/corpus/synthetic.h"
#include "mulan/dsp/context_window.h"
#include "mulan/dsp/spectrogram.h"
#include "mulan/model/towers.h"
#include "mulan/nn/adam.h"
#include "mulan/nn/logistic_regression.h"
#include "mulan/text/filters.h"

namespace mulan::app {

struct TrainingConfig {
  std::size_t batch_size = 64;
  std::array<double, 4> mixing = {2, 2, 1, 1};  // SF:LF:PL:ASET
  std::size_t epochs = 100;
  std::size_t max_steps = 0;                     // 0 = no cap
  bool augment = true;
  dsp::SpecAugmentConfig spec_augment;
  std::size_t train_recordings = 800;            // synthetic split point
  std::size_t checkpoint_every_epochs = 1;
};

struct FilterConfig {
  bool lf_classifier = false;
  double threshold = 0.5;
  std::size_t labeled_sentences = 200;
  std::string labeled_path;                      // TSV; empty = synthetic labels
  text::FilterRuleSet sf_rules;
};

struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 1;
  int workers = 1;
  std::size_t max_tokens = 32;
  dsp::SpectrogramConfig mel;
  model::ModelConfig model;
  contrastive::LossConfig loss;
  nn::OptimizerConfig optimizer;
  TrainingConfig training;
  corpus::SyntheticSpec synthetic;
  FilterConfig filter;
  nn::LogisticConfig probe;

  // Cross-field checks; throws ConfigError naming the first violation.
  // With `need_vocab`, text.vocab_size must already be set.
  void validate(bool need_vocab = false) const;
};

// Desk-scale defaults and the published full-scale hyperparameters.
RunConfig desk_profile();
RunConfig paper_profile();

nlohmann::json to_json(const RunConfig& cfg);
// Strict: unknown keys and wrong types raise ConfigError. Keys absent from
// `j` keep the values of the profile named by j["profile"] (default desk).
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
// Canonical serialisation and its CRC-32 (hex).
std::string config_text(const RunConfig& cfg);
std::string config_digest(const RunConfig& cfg);

}  // namespace mulan::app

#endif  // MULAN_APP_CONFIG_H_
