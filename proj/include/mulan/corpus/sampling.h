// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_CORPUS_SAMPLING_H_
#define MULAN_CORPUS_SAMPLING_H_

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "mulan/corpus/corpus.h"
#include "mulan/corpus/features.h"
#include "mulan/dsp/context_window.h"
#include "mulan/text/tokenizer.h"
#include "mulan/text/vocabulary.h"

namespace mulan::corpus {

// Per-source pair counts of one batch, indexed by SourceType.
struct MixingSpec {
  std::array<std::size_t, 4> counts{};

  // Apportions B over the ratio (SF, LF, PL, ASET). Source k receives
  // ceil(B * c_k / S) - ceil(B * c_{k-1} / S), where c_k is the cumulative
  // ratio through k and S its total, so rounding surplus lands on the
  // earliest sources: 2:2:1:1 at B = 64 gives (22, 21, 11, 10).
  static MixingSpec from_ratio(std::size_t batch_size, const std::array<double, 4>& ratio);
  static MixingSpec only(SourceType source, std::size_t batch_size);

  std::size_t batch_size() const;
  std::size_t count(SourceType s) const { return counts[static_cast<std::size_t>(s)]; }
  bool operator==(const MixingSpec&) const = default;
};

struct SamplerConfig {
  std::size_t window_frames = 100;
  std::size_t max_tokens = 32;
  bool augment = true;
  dsp::SpecAugmentConfig augment_config;
};

struct PairSample {
  dsp::ContextWindow window;
  text::TokenSequence tokens;
  std::size_t recording = 0;
  std::size_t annotation = 0;
  SourceType source = SourceType::kSF;
};

// Draws (window, text) pairs: a recording uniformly among those with an
// annotation of the requested source and at least T frames, a window start
// uniformly over its valid offsets, then one of its annotations of that
// source uniformly.
class PairSampler {
 public:
  PairSampler(const Corpus& corpus, const FeatureStore& features, const text::Vocabulary& vocab,
              SamplerConfig cfg);

  std::size_t eligible_count(SourceType source) const {
    return eligible_[static_cast<std::size_t>(source)].size();
  }
  // Throws SamplingError if no recording is eligible.
  PairSample sample(SourceType source, std::mt19937_64& rng) const;

  const Corpus& corpus() const { return corpus_; }
  const SamplerConfig& config() const { return cfg_; }

 private:
  const Corpus& corpus_;
  const FeatureStore& features_;
  const text::Vocabulary& vocab_;
  SamplerConfig cfg_;
  std::array<std::vector<std::size_t>, 4> eligible_;
};

// Exactly mix.counts pairs per source in shuffled order. Slot order and one
// seed per slot come from `rng`, so the result does not depend on `workers`.
// Throws BatchError naming the first unsatisfiable source.
std::vector<PairSample> assemble_batch(const PairSampler& sampler, const MixingSpec& mix,
                                       std::mt19937_64& rng, int workers = 1);

}  // namespace mulan::corpus

#endif  // MULAN_CORPUS_SAMPLING_H_
