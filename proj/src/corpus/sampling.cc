// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/corpus/sampling.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mulan/error.h"
#include "mulan/parallel.h"

namespace mulan::corpus {

MixingSpec MixingSpec::from_ratio(std::size_t batch_size, const std::array<double, 4>& ratio) {
  double total = 0.0;
  for (double r : ratio) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("mixing ratio entries must be >= 0");
    total += r;
  }
  if (!(total > 0.0)) throw ConfigError("mixing ratio must have positive total");
  MixingSpec spec;
  double cumulative = 0.0;
  std::size_t previous = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    cumulative += ratio[k];
    std::size_t upto = k == 3 ? batch_size
                              : static_cast<std::size_t>(std::ceil(
                                    static_cast<double>(batch_size) * cumulative / total - 1e-9));
    upto = std::clamp(upto, previous, batch_size);
    spec.counts[k] = upto - previous;
    previous = upto;
  }
  return spec;
}

MixingSpec MixingSpec::only(SourceType source, std::size_t batch_size) {
  MixingSpec spec;
  spec.counts[static_cast<std::size_t>(source)] = batch_size;
  return spec;
}

std::size_t MixingSpec::batch_size() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

PairSampler::PairSampler(const Corpus& corpus, const FeatureStore& features,
                         const text::Vocabulary& vocab, SamplerConfig cfg)
    : corpus_(corpus), features_(features), vocab_(vocab), cfg_(std::move(cfg)) {
  if (features_.size() != corpus_.size()) {
    throw ArgumentError("feature store does not match corpus size");
  }
  if (cfg_.window_frames == 0) throw ConfigError("sampler window_frames must be positive");
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    if (features_[i].frames() < cfg_.window_frames) continue;
    for (SourceType s : kAllSources) {
      if (corpus_[i].has_source(s)) eligible_[static_cast<std::size_t>(s)].push_back(i);
    }
  }
}

PairSample PairSampler::sample(SourceType source, std::mt19937_64& rng) const {
  const auto& pool = eligible_[static_cast<std::size_t>(source)];
  if (pool.empty()) {
    throw SamplingError("no recording with a " + source_name(source) + " annotation and at least " +
                        std::to_string(cfg_.window_frames) + " frames");
  }
  PairSample out;
  out.source = source;
  out.recording = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  const auto& spec = features_[out.recording];
  const std::size_t last = spec.frames() - cfg_.window_frames;
  const std::size_t start = std::uniform_int_distribution<std::size_t>(0, last)(rng);
  const Recording& rec = corpus_[out.recording];
  const auto candidates = rec.annotation_indices(source);
  out.annotation = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  out.window = dsp::extract_window(spec, start, cfg_.window_frames, rec.id);
  if (cfg_.augment) out.window = dsp::spec_augment(out.window, cfg_.augment_config, rng());
  out.tokens = text::tokenize(rec.annotations[out.annotation].text, vocab_, cfg_.max_tokens);
  return out;
}

std::vector<PairSample> assemble_batch(const PairSampler& sampler, const MixingSpec& mix,
                                       std::mt19937_64& rng, int workers) {
  std::vector<SourceType> slots;
  for (SourceType s : kAllSources) {
    if (mix.count(s) > 0 && sampler.eligible_count(s) == 0) {
      throw BatchError("mixing requests " + std::to_string(mix.count(s)) + " " + source_name(s) +
                       " pairs but no recording can supply one");
    }
    slots.insert(slots.end(), mix.count(s), s);
  }
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<std::uint64_t> seeds(slots.size());
  for (auto& s : seeds) s = rng();
  std::vector<PairSample> batch(slots.size());
  parallel_for(slots.size(), workers, [&](std::size_t i) {
    std::mt19937_64 local(seeds[i]);
    batch[i] = sampler.sample(slots[i], local);
  });
  return batch;
}

}  // namespace mulan::corpus
