// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/corpus/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mulan/error.h"
#include "mulan/text/tokenizer.h"

namespace mulan::corpus {
namespace {

constexpr std::array<const char*, 16> kNames = {"rock",  "jazz",  "piano", "techno",
                                                "violin", "ambient", "reggae", "choir",
                                                "flute", "drums", "blues", "opera",
                                                "synth", "harp",  "metal", "folk"};

std::string concept_name(std::size_t k) {
  return k < kNames.size() ? kNames[k] : "concept" + std::to_string(k);
}

std::string pseudo_word(std::mt19937_64& rng) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::uniform_int_distribution<std::size_t> syllables(2, 3);
  std::uniform_int_distribution<std::size_t> cons(0, kConsonants.size() - 1);
  std::uniform_int_distribution<std::size_t> vow(0, kVowels.size() - 1);
  std::string w;
  const std::size_t n = syllables(rng);
  for (std::size_t i = 0; i < n; ++i) {
    w += kConsonants[cons(rng)];
    w += kVowels[vow(rng)];
  }
  return w;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool chance(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

void add_noise(std::vector<std::string>& words, const Lexicon& lex, double rate,
               std::mt19937_64& rng) {
  for (auto& w : words) {
    if (chance(rng, rate)) w = lex.noise[uniform_index(rng, lex.noise.size())];
  }
}

// The concept name, alone or among one or two pool words.
std::string short_tag(const Lexicon& lex, std::size_t k, double noise_rate, std::mt19937_64& rng) {
  std::vector<std::string> words;
  if (!chance(rng, 0.3)) {
    const std::size_t n = 1 + uniform_index(rng, 2);
    for (std::size_t i = 0; i < n; ++i) words.push_back(lex.pools[k][0][uniform_index(rng, lex.pools[k][0].size())]);
  }
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, words.size() + 1)), lex.names[k]);
  add_noise(words, lex, noise_rate, rng);
  return join(words);
}

std::string sentence(const Lexicon& lex, std::size_t k, std::size_t n, double noise_rate,
                     std::mt19937_64& rng) {
  const auto& pool = lex.pools[k][1];
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(pool[uniform_index(rng, pool.size())]);
  if (chance(rng, 0.3)) words[uniform_index(rng, n)] = lex.names[k];
  add_noise(words, lex, noise_rate, rng);
  return join(words);
}

std::string noise_sentence(const Lexicon& lex, std::size_t n, std::mt19937_64& rng) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(lex.noise[uniform_index(rng, lex.noise.size())]);
  return join(words);
}

std::size_t sentence_length(std::mt19937_64& rng) { return 4 + uniform_index(rng, 4); }

}  // namespace

void SyntheticSpec::validate() const {
  if (num_concepts < 2) throw ConfigError("synthetic: num_concepts must be >= 2");
  if (min_concepts < 1 || min_concepts > max_concepts || max_concepts > num_concepts) {
    throw ConfigError("synthetic: need 1 <= min_concepts <= max_concepts <= num_concepts");
  }
  auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!unit(noise_rate) || !unit(distractor_rate) || !unit(playlist_coverage) ||
      !unit(aset_coverage)) {
    throw ConfigError("synthetic: rates and coverages must lie in [0, 1]");
  }
  if (pool_size < 1 || noise_pool_size < 1) throw ConfigError("synthetic: pools must be non-empty");
  if (!(duration_seconds > 0.0)) throw ConfigError("synthetic: duration_seconds must be > 0");
  if (!(min_amplitude > 0.0 && min_amplitude <= max_amplitude) ||
      max_amplitude * static_cast<double>(max_concepts) > 1.0) {
    throw ConfigError("synthetic: amplitudes must satisfy 0 < min <= max and max * max_concepts <= 1");
  }
  if (!(noise_level >= 0.0)) throw ConfigError("synthetic: noise_level must be >= 0");
}

Lexicon make_lexicon(const SyntheticSpec& spec) {
  spec.validate();
  Lexicon lex;
  std::unordered_set<std::string> used;
  for (std::size_t k = 0; k < spec.num_concepts; ++k) {
    lex.names.push_back(concept_name(k));
    used.insert(lex.names.back());
  }
  std::mt19937_64 rng(spec.seed ^ 0x6c657869636f6eULL);
  auto fresh = [&] {
    for (;;) {
      std::string w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  lex.pools.resize(spec.num_concepts);
  for (std::size_t k = 0; k < spec.num_concepts; ++k) {
    for (auto& pool : lex.pools[k]) {
      for (std::size_t i = 0; i < spec.pool_size; ++i) pool.push_back(fresh());
    }
  }
  for (std::size_t i = 0; i < spec.noise_pool_size; ++i) lex.noise.push_back(fresh());
  return lex;
}

std::vector<std::size_t> concept_bands(const SyntheticSpec& spec, const dsp::SpectrogramConfig& mel) {
  spec.validate();
  const std::size_t f = mel.mel_channels;
  if (f < 5 || f - 5 < spec.num_concepts - 1) {
    throw ConfigError("synthetic: " + std::to_string(mel.mel_channels) + " mel channels cannot resolve " +
                      std::to_string(spec.num_concepts) + " concept bands");
  }
  std::vector<std::size_t> bands;
  const double span = static_cast<double>(f - 5);
  for (std::size_t k = 0; k < spec.num_concepts; ++k) {
    const double pos = span * static_cast<double>(k) / static_cast<double>(spec.num_concepts - 1);
    bands.push_back(2 + static_cast<std::size_t>(std::lround(pos)));
  }
  return bands;
}

std::vector<double> concept_frequencies(const SyntheticSpec& spec, const dsp::SpectrogramConfig& mel) {
  const dsp::MelFilterbank bank(mel, dsp::kInternalSampleRate);
  std::vector<double> out;
  for (std::size_t b : concept_bands(spec, mel)) out.push_back(bank.center_hz(b));
  return out;
}

std::string concept_sentence(const Lexicon& lex, std::size_t concept_id, std::size_t words,
                             double noise_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sentence(lex, concept_id, std::max<std::size_t>(words, 1), noise_rate, rng);
}

std::string distractor_sentence(const Lexicon& lex, std::size_t words, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return noise_sentence(lex, std::max<std::size_t>(words, 1), rng);
}

Corpus generate_synthetic(const SyntheticSpec& spec, const dsp::SpectrogramConfig& mel) {
  const Lexicon lex = make_lexicon(spec);
  concept_bands(spec, mel);
  std::mt19937_64 rng(spec.seed);
  Corpus corpus;
  std::vector<std::size_t> all(spec.num_concepts);
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  for (std::size_t r = 0; r < spec.num_recordings; ++r) {
    Recording rec;
    char id[32];
    std::snprintf(id, sizeof(id), "syn%05zu", r);
    rec.id = id;
    const std::size_t nc =
        spec.min_concepts + uniform_index(rng, spec.max_concepts - spec.min_concepts + 1);
    std::vector<std::size_t> picked;
    std::sample(all.begin(), all.end(), std::back_inserter(picked), nc, rng);
    std::sort(picked.begin(), picked.end());
    rec.synthetic_seed = rng();
    for (std::size_t k : picked) {
      rec.concepts.push_back(static_cast<int>(k));
      rec.labels.push_back(lex.names[k]);
    }
    for (std::size_t k : picked) {
      rec.annotations.push_back({SourceType::kSF, short_tag(lex, k, spec.noise_rate, rng)});
    }
    for (std::size_t k : picked) {
      rec.annotations.push_back({SourceType::kLF, sentence(lex, k, sentence_length(rng), spec.noise_rate, rng)});
      if (chance(rng, spec.distractor_rate)) {
        rec.annotations.push_back({SourceType::kLF, noise_sentence(lex, sentence_length(rng), rng)});
      }
    }
    if (chance(rng, spec.playlist_coverage)) {
      std::vector<std::string> words;
      const std::size_t n = 2 + uniform_index(rng, 2);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& pool = lex.pools[picked[uniform_index(rng, picked.size())]][2];
        words.push_back(pool[uniform_index(rng, pool.size())]);
      }
      add_noise(words, lex, spec.noise_rate, rng);
      rec.annotations.push_back({SourceType::kPL, join(words)});
    }
    if (chance(rng, spec.aset_coverage)) {
      for (std::size_t k : picked) rec.annotations.push_back({SourceType::kASET, lex.names[k]});
    }
    corpus.add(std::move(rec));
  }
  return corpus;
}

dsp::Waveform render_synthetic(const Recording& recording, const SyntheticSpec& spec,
                               const dsp::SpectrogramConfig& mel) {
  if (!recording.synthetic_seed) {
    throw LoadError("recording '" + recording.id + "' has no synthetic seed");
  }
  const std::vector<double> freqs = concept_frequencies(spec, mel);
  std::mt19937_64 rng(*recording.synthetic_seed);
  std::uniform_real_distribution<double> amp(spec.min_amplitude, spec.max_amplitude);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  struct Tone {
    double amplitude, omega, phase;
  };
  std::vector<Tone> tones;
  for (int k : recording.concepts) {
    if (k < 0 || static_cast<std::size_t>(k) >= freqs.size()) {
      throw LoadError("recording '" + recording.id + "' names unknown concept " + std::to_string(k));
    }
    const double a = amp(rng);
    const double hz = freqs[static_cast<std::size_t>(k)] * (1.0 + jitter(rng));
    tones.push_back({a, 2.0 * std::numbers::pi * hz / dsp::kInternalSampleRate, phase(rng)});
  }
  std::normal_distribution<double> noise(0.0, spec.noise_level);
  dsp::Waveform wave;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_seconds * dsp::kInternalSampleRate));
  wave.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = spec.noise_level > 0.0 ? noise(rng) : 0.0;
    for (const Tone& t : tones) v += t.amplitude * std::sin(t.omega * static_cast<double>(i) + t.phase);
    wave.samples[i] = std::clamp(v, -1.0, 1.0);
  }
  return wave;
}

std::vector<text::LabeledSentence> labeled_sentences(const SyntheticSpec& spec, std::size_t count,
                                                     std::uint64_t seed) {
  const Lexicon lex = make_lexicon(spec);
  std::mt19937_64 rng(seed);
  std::vector<text::LabeledSentence> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 2 == 0) {
      const std::size_t k = uniform_index(rng, spec.num_concepts);
      out.emplace_back(sentence(lex, k, sentence_length(rng), spec.noise_rate, rng), true);
    } else {
      out.emplace_back(noise_sentence(lex, sentence_length(rng), rng), false);
    }
  }
  return out;
}

Corpus strip_distractors(const Corpus& corpus, const Lexicon& lex) {
  const std::set<std::string> noise(lex.noise.begin(), lex.noise.end());
  Corpus out(corpus.base_dir());
  for (Recording r : corpus.recordings()) {
    std::erase_if(r.annotations, [&](const Annotation& a) {
      if (a.source != SourceType::kLF) return false;
      const auto words = text::basic_tokenize(a.text);
      return !words.empty() &&
             std::all_of(words.begin(), words.end(), [&](const auto& w) { return noise.count(w); });
    });
    out.add(std::move(r));
  }
  return out;
}

}  // namespace mulan::corpus
