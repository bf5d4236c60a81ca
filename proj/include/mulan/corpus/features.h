// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_CORPUS_FEATURES_H_
#define MULAN_CORPUS_FEATURES_H_

#include <optional>
#include <vector>

#include "mulan/corpus/corpus.h"
#include "mulan/corpus/synthetic.h"
#include "mulan/dsp/context_window.h"
#include "mulan/dsp/spectrogram.h"
#include "mulan/dsp/waveform.h"

namespace mulan::corpus {

// Audio for a recording: its file if it names one, otherwise the synthetic
// rendering (which needs `synthetic`). Throws LoadError when neither applies.
dsp::Waveform recording_waveform(const Corpus& corpus, const Recording& recording,
                                 const SyntheticSpec* synthetic,
                                 const dsp::SpectrogramConfig& mel);

// Log-mel spectrogram of every recording, computed once up front.
class FeatureStore {
 public:
  FeatureStore() = default;
  static FeatureStore compute(const Corpus& corpus, const dsp::SpectrogramConfig& mel,
                              const SyntheticSpec* synthetic, int workers);

  const dsp::LogMelSpectrogram& operator[](std::size_t i) const { return spectra_.at(i); }
  std::size_t size() const { return spectra_.size(); }

 private:
  std::vector<dsp::LogMelSpectrogram> spectra_;
};

// Non-overlapping T-frame segments from the start of the clip. A clip shorter
// than T yields one padded segment and sets *padded.
std::vector<dsp::ContextWindow> clip_segments(const dsp::LogMelSpectrogram& spec, std::size_t frames,
                                              bool* padded = nullptr);

}  // namespace mulan::corpus

#endif  // MULAN_CORPUS_FEATURES_H_
