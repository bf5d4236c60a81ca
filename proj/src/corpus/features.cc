// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/corpus/features.h"

#include "mulan/error.h"
#include "mulan/parallel.h"

namespace mulan::corpus {

dsp::Waveform recording_waveform(const Corpus& corpus, const Recording& recording,
                                 const SyntheticSpec* synthetic, const dsp::SpectrogramConfig& mel) {
  if (recording.audio) return dsp::load_audio(corpus.resolve_audio(recording));
  if (recording.synthetic_seed) {
    if (!synthetic) {
      throw LoadError("recording '" + recording.id + "' is synthetic but no synthetic spec was given");
    }
    return render_synthetic(recording, *synthetic, mel);
  }
  throw LoadError("recording '" + recording.id + "' has neither audio nor synthetic_seed");
}

FeatureStore FeatureStore::compute(const Corpus& corpus, const dsp::SpectrogramConfig& mel,
                                   const SyntheticSpec* synthetic, int workers) {
  FeatureStore store;
  store.spectra_.resize(corpus.size());
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    store.spectra_[i] = dsp::compute_log_mel(recording_waveform(corpus, corpus[i], synthetic, mel), mel);
  });
  return store;
}

std::vector<dsp::ContextWindow> clip_segments(const dsp::LogMelSpectrogram& spec, std::size_t frames,
                                              bool* padded) {
  if (frames == 0) throw ArgumentError("segment length must be positive");
  std::vector<dsp::ContextWindow> out;
  if (padded) *padded = false;
  if (spec.frames() < frames) {
    if (padded) *padded = true;
    out.push_back(dsp::pad_or_trim_to_window(spec, frames));
    return out;
  }
  for (std::size_t start = 0; start + frames <= spec.frames(); start += frames) {
    out.push_back(dsp::extract_window(spec, start, frames));
  }
  return out;
}

}  // namespace mulan::corpus
