// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_MODEL_TOWERS_H_
#define MULAN_MODEL_TOWERS_H_

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mulan/dsp/context_window.h"
#include "mulan/nn/parameter_store.h"
#include "mulan/nn/tape.h"
#include "mulan/text/tokenizer.h"

namespace mulan::model {

// Transformer stack shape shared by both towers. The patch fields apply to the
// audio tower, the vocabulary and position fields to the text tower.
struct TowerConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 64;
  std::size_t num_heads = 4;
  std::size_t mlp_dim = 128;
  std::size_t embed_dim = 32;
  std::size_t patch_size = 8;
  std::size_t patch_stride = 8;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 32;

  void validate_common(const std::string& what) const;
  // Throws ConfigError/SizeError unless an [F, T] window holds >= 1 patch.
  void validate_audio(std::size_t channels, std::size_t frames) const;
  void validate_text() const;
  bool operator==(const TowerConfig&) const = default;
};

struct ModelConfig {
  TowerConfig audio;
  TowerConfig text;
  std::size_t mel_channels = 32;   // F
  std::size_t window_frames = 100; // T
  double init_std = 0.02;

  void validate() const;
  std::size_t embed_dim() const { return audio.embed_dim; }
  bool operator==(const ModelConfig&) const = default;
};

using Embedding = std::vector<double>;

// Patches at every multiple of the stride that fits fully, in frequency-major
// order; each row is a patch flattened as [freq][time].
std::size_t patch_count(std::size_t channels, std::size_t frames, std::size_t patch,
                        std::size_t stride);
nn::Tensor audio_patch_tokens(const dsp::ContextWindow& window, const TowerConfig& cfg);

// Registers every tower parameter: weights ~ truncated normal (resampled
// beyond two standard deviations), biases zero, norm gains one.
void init_tower_parameters(nn::ParameterStore& store, const ModelConfig& cfg, std::mt19937_64& rng);

// Differentiable tower graphs. Both return a unit-norm [1, d] row and bind
// their parameters from `store` onto `tape`.
nn::Var audio_tower(nn::Tape& tape, const nn::ParameterStore& store, const ModelConfig& cfg,
                    const dsp::ContextWindow& window);
nn::Var text_tower(nn::Tape& tape, const nn::ParameterStore& store, const ModelConfig& cfg,
                   const text::TokenSequence& tokens);

// Inference on a fixed parameter snapshot. Safe to call concurrently.
Embedding embed_audio(const nn::ParameterStore& store, const ModelConfig& cfg,
                      const dsp::ContextWindow& window);
Embedding embed_text(const nn::ParameterStore& store, const ModelConfig& cfg,
                     const text::TokenSequence& tokens);
// Mean of the segment embeddings, re-normalised to unit length.
Embedding embed_clip(const nn::ParameterStore& store, const ModelConfig& cfg,
                     std::span<const dsp::ContextWindow> segments);

double cosine(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

}  // namespace mulan::model

#endif  // MULAN_MODEL_TOWERS_H_
