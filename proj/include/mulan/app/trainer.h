// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_APP_TRAINER_H_
#define MULAN_APP_TRAINER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mulan/app/bundle.h"
#include "mulan/app/config.h"
#include "mulan/corpus/sampling.h"
#include "mulan/nn/checkpoint.h"

namespace mulan::app {

struct FilterSummary {
  std::size_t sf_before = 0, sf_after = 0;
  std::size_t lf_before = 0, lf_after = 0;
  double classifier_accuracy = 0.0;  // training accuracy, 0 when unused
};

// SF rules, then (if enabled) the LF descriptiveness filter. The classifier
// is trained on cfg.filter.labeled_path, or on synthetic labelled sentences
// when that is empty.
corpus::Corpus apply_filters(const RunConfig& cfg, const corpus::Corpus& corpus,
                             FilterSummary* summary = nullptr);

struct StepStats {
  std::uint64_t step = 0;  // 1-based index of the step just taken
  double loss = 0.0;
  double tau = 0.0;
  double lr = 0.0;
  std::array<std::size_t, 4> pairs{};
};

std::string format_log_row(const StepStats& s);
inline constexpr const char* kLogHeader = "step,loss,tau,lr,pairs_per_source";

// One contrastive training run over a fixed corpus. Each pair gets its own
// forward tapes; the loss is evaluated on the stacked embeddings and its row
// gradients are pushed back through every pair's tapes. Parameter gradients
// are summed in pair order, so results do not depend on the worker count.
class Trainer {
 public:
  Trainer(RunConfig cfg, const corpus::Corpus& corpus, const corpus::FeatureStore& features,
          text::Vocabulary vocab);

  // Fresh parameters from cfg.seed.
  void initialize();
  // Parameters, optimizer state, step counter and sampler state.
  void restore(const nn::Checkpoint& ckpt);
  nn::Checkpoint checkpoint() const;

  // Throws TrainingError (wrapping the numeric failure) if the step produced
  // a non-finite value; parameters are then left untouched.
  StepStats step();

  std::uint64_t global_step() const { return global_step_; }
  std::uint64_t steps_per_epoch() const;
  std::uint64_t total_steps() const;
  const RunConfig& config() const { return cfg_; }
  const nn::ParameterStore& params() const { return params_; }
  const text::Vocabulary& vocab() const { return vocab_; }
  ModelBundle bundle() const;

 private:
  RunConfig cfg_;
  const corpus::Corpus& corpus_;
  text::Vocabulary vocab_;
  corpus::PairSampler sampler_;
  corpus::MixingSpec mix_;
  nn::ParameterStore params_;
  std::mt19937_64 rng_;
  std::uint64_t global_step_ = 0;
};

struct RunOptions {
  std::filesystem::path out_dir;
  bool resume = false;                       // continue from out_dir/checkpoint.ckpt
  std::optional<std::uint64_t> stop_after;   // halt once global_step reaches this
  std::function<void(const StepStats&)> on_step;
};

struct RunSummary {
  std::uint64_t steps = 0;
  std::vector<double> losses;  // this invocation only
  std::filesystem::path final_checkpoint;
};

// Drives `trainer` to total_steps(), writing train_log.csv, checkpoint.ckpt
// at each checkpoint epoch, final.ckpt at the end and abort.ckpt (last good
// state) on failure. Holds out_dir/train.lock for the duration.
RunSummary run_training(Trainer& trainer, const RunOptions& options);

}  // namespace mulan::app

#endif  // MULAN_APP_TRAINER_H_
