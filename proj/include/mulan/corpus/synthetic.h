// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_CORPUS_SYNTHETIC_H_
#define MULAN_CORPUS_SYNTHETIC_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mulan/corpus/corpus.h"
#include "mulan/dsp/spectrogram.h"
#include "mulan/dsp/waveform.h"
#include "mulan/text/filters.h"

namespace mulan::corpus {

// Planted-ground-truth corpus: each concept is a steady tone at its own mel
// band and owns disjoint word pools for the SF, LF and PL sources; its name
// is its ASET label.
struct SyntheticSpec {
  std::size_t num_concepts = 8;
  std::size_t num_recordings = 1000;
  std::size_t min_concepts = 1;
  std::size_t max_concepts = 3;
  double noise_rate = 0.2;        // per-token chance of a noise word
  double distractor_rate = 0.3;   // per LF sentence chance of an extra noise sentence
  double playlist_coverage = 0.4; // fraction of recordings with a PL title
  double aset_coverage = 0.5;     // fraction of recordings with ASET labels
  std::size_t pool_size = 8;      // words per concept per source
  std::size_t noise_pool_size = 48;
  double duration_seconds = 2.1;
  double min_amplitude = 0.15;
  double max_amplitude = 0.3;
  double noise_level = 0.005;
  std::uint64_t seed = 1234;

  // Throws ConfigError on inconsistent fields.
  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

// Word pools derived from SyntheticSpec::seed.
struct Lexicon {
  std::vector<std::string> names;                                  // per concept
  std::vector<std::array<std::vector<std::string>, 3>> pools;      // [concept][SF, LF, PL]
  std::vector<std::string> noise;
};

Lexicon make_lexicon(const SyntheticSpec& spec);

// Planted mel band and tone frequency per concept. Throws ConfigError if the
// mel configuration cannot give every concept its own band.
std::vector<std::size_t> concept_bands(const SyntheticSpec& spec, const dsp::SpectrogramConfig& mel);
std::vector<double> concept_frequencies(const SyntheticSpec& spec, const dsp::SpectrogramConfig& mel);

// Deterministic corpus of spec.num_recordings recordings ("syn00000", ...).
// Audio is referenced by synthetic_seed and rendered on demand.
Corpus generate_synthetic(const SyntheticSpec& spec, const dsp::SpectrogramConfig& mel);

// Tones of the recording's concepts plus Gaussian noise, at 16 kHz.
dsp::Waveform render_synthetic(const Recording& recording, const SyntheticSpec& spec,
                               const dsp::SpectrogramConfig& mel);

// A genuine LF-style sentence about `concept_id` and a distractor sentence.
std::string concept_sentence(const Lexicon& lex, std::size_t concept_id, std::size_t words,
                             double noise_rate, std::uint64_t seed);
std::string distractor_sentence(const Lexicon& lex, std::size_t words, std::uint64_t seed);

// Balanced labelled set for the descriptiveness classifier: genuine LF
// sentences (true) and distractors (false).
std::vector<text::LabeledSentence> labeled_sentences(const SyntheticSpec& spec, std::size_t count,
                                                     std::uint64_t seed);

// Copy of `corpus` without LF annotations built from the noise pool.
Corpus strip_distractors(const Corpus& corpus, const Lexicon& lex);

}  // namespace mulan::corpus

#endif  // MULAN_CORPUS_SYNTHETIC_H_
