// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "mulan/corpus/corpus.h"
#include "mulan/corpus/features.h"
#include "mulan/corpus/sampling.h"
#include "mulan/corpus/synthetic.h"
#include "mulan/error.h"
#include "mulan/text/tokenizer.h"

using namespace mulan;
using namespace mulan::corpus;

namespace {

std::set<std::string> words_of(const Recording& r) {
  std::set<std::string> out;
  for (const auto& a : r.annotations) {
    for (auto& w : text::basic_tokenize(a.text)) out.insert(w);
  }
  return out;
}

struct SmallWorld {
  SyntheticSpec spec;
  dsp::SpectrogramConfig mel;
  Corpus corpus;
  FeatureStore features;
  text::Vocabulary vocab;

  explicit SmallWorld(std::size_t recordings) {
    spec.num_recordings = recordings;
    spec.playlist_coverage = 1.0;
    spec.aset_coverage = 1.0;
    corpus = generate_synthetic(spec, mel);
    features = FeatureStore::compute(corpus, mel, &spec, 1);
    vocab = text::build_vocabulary(corpus.all_texts());
  }
};

}  // namespace

TEST_CASE("mixing apportionment") {
  CHECK(MixingSpec::from_ratio(6, {2, 2, 1, 1}).counts == std::array<std::size_t, 4>{2, 2, 1, 1});
  CHECK(MixingSpec::from_ratio(64, {2, 2, 1, 1}).counts == std::array<std::size_t, 4>{22, 21, 11, 10});
  CHECK(MixingSpec::from_ratio(5120, {2, 2, 1, 1}).counts == std::array<std::size_t, 4>{1707, 1707, 853, 853});
  CHECK(MixingSpec::from_ratio(7, {0, 0, 0, 1}).counts == std::array<std::size_t, 4>{0, 0, 0, 7});
  for (std::size_t b = 1; b < 200; ++b) {
    const MixingSpec m = MixingSpec::from_ratio(b, {2, 2, 1, 1});
    CHECK(m.batch_size() == b);
    for (std::size_t k = 0; k < 4; ++k) {
      const double exact = b * (k < 2 ? 2.0 : 1.0) / 6.0;
      CHECK(std::abs(static_cast<double>(m.counts[k]) - exact) < 1.0);
    }
  }
  CHECK(MixingSpec::only(SourceType::kASET, 9).count(SourceType::kASET) == 9);
  CHECK_THROWS_AS(MixingSpec::from_ratio(8, {0, 0, 0, 0}), ConfigError);
}

TEST_CASE("source names") {
  for (SourceType s : kAllSources) CHECK(parse_source(source_name(s)) == s);
  CHECK(source_name(SourceType::kPL) == "PL");
  CHECK_THROWS_AS(parse_source("XX"), ParseError);
}

TEST_CASE("synthetic corpus is deterministic and well formed") {
  SyntheticSpec spec;
  spec.num_recordings = 60;
  const dsp::SpectrogramConfig mel;
  const Corpus a = generate_synthetic(spec, mel);
  const Corpus b = generate_synthetic(spec, mel);
  CHECK(corpus_to_jsonl(a) == corpus_to_jsonl(b));
  CHECK(a.size() == 60);
  for (const auto& r : a.recordings()) {
    CHECK(r.concepts.size() >= 1);
    CHECK(r.concepts.size() <= 3);
    CHECK(r.has_source(SourceType::kSF));
    CHECK(r.has_source(SourceType::kLF));
  }
  const dsp::Waveform w1 = render_synthetic(a[3], spec, mel);
  CHECK(w1.samples == render_synthetic(b[3], spec, mel).samples);
  CHECK(dsp::frame_count(w1.samples.size(), mel, w1.sample_rate_hz) >= 100);
  spec.seed += 1;
  CHECK(corpus_to_jsonl(generate_synthetic(spec, mel)) != corpus_to_jsonl(a));
}

TEST_CASE("noise-free annotations use only their concepts' pools") {
  SyntheticSpec spec;
  spec.num_concepts = 2;
  spec.max_concepts = 2;
  spec.num_recordings = 40;
  spec.noise_rate = 0.0;
  spec.distractor_rate = 0.0;
  const Corpus c = generate_synthetic(spec, dsp::SpectrogramConfig{});
  const Lexicon lex = make_lexicon(spec);
  for (const auto& r : c.recordings()) {
    std::set<std::string> allowed;
    for (int k : r.concepts) {
      allowed.insert(lex.names[k]);
      for (const auto& pool : lex.pools[k]) allowed.insert(pool.begin(), pool.end());
    }
    for (const auto& w : words_of(r)) CHECK(allowed.count(w) == 1);
  }
}

TEST_CASE("concept vocabularies: disjoint across concepts, shared within") {
  SyntheticSpec spec;
  spec.num_recordings = 200;
  spec.noise_rate = 0.0;
  spec.distractor_rate = 0.0;
  const Corpus c = generate_synthetic(spec, dsp::SpectrogramConfig{});
  std::size_t disjoint_pairs = 0, shared_pairs = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      std::set<int> ci(c[i].concepts.begin(), c[i].concepts.end());
      bool share = false;
      for (int k : c[j].concepts) share = share || ci.count(k);
      const auto wi = words_of(c[i]), wj = words_of(c[j]);
      bool overlap = false;
      for (const auto& w : wi) overlap = overlap || wj.count(w);
      if (share) {
        ++shared_pairs;
        CHECK(overlap);
      } else {
        ++disjoint_pairs;
        CHECK_FALSE(overlap);
      }
    }
  }
  CHECK(disjoint_pairs > 0);
  CHECK(shared_pairs > 0);
}

TEST_CASE("planted tones dominate their mel bands") {
  SyntheticSpec spec;
  spec.num_recordings = 100;
  const dsp::SpectrogramConfig mel;
  const auto bands = concept_bands(spec, mel);
  CHECK(std::set<std::size_t>(bands.begin(), bands.end()).size() == bands.size());
  const Corpus c = generate_synthetic(spec, mel);
  const FeatureStore fs = FeatureStore::compute(c, mel, &spec, 1);
  std::size_t frames = 0, hits = 0;
  for (std::size_t r = 0; r < c.size(); ++r) {
    std::set<std::size_t> planted;
    for (int k : c[r].concepts) planted.insert(bands[k]);
    const auto& s = fs[r];
    for (std::size_t f = 0; f < s.frames(); ++f) {
      std::size_t best = 0;
      for (std::size_t m = 1; m < s.channels(); ++m) {
        if (s.values.at(m, f) > s.values.at(best, f)) best = m;
      }
      ++frames;
      hits += planted.count(best);
    }
  }
  CHECK(static_cast<double>(hits) / frames > 0.99);

  SyntheticSpec crowded;
  crowded.num_concepts = 40;
  CHECK_THROWS_AS(concept_bands(crowded, mel), ConfigError);
}

TEST_CASE("distractors are plain noise and strip cleanly") {
  SyntheticSpec spec;
  spec.num_recordings = 100;
  spec.noise_rate = 0.0;  // a fully noised concept sentence would also strip
  const Corpus c = generate_synthetic(spec, dsp::SpectrogramConfig{});
  const Lexicon lex = make_lexicon(spec);
  const Corpus stripped = strip_distractors(c, lex);
  std::size_t removed = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(stripped[i].annotation_indices(SourceType::kLF).size() == c[i].concepts.size());
    removed += c[i].annotations.size() - stripped[i].annotations.size();
    CHECK(stripped[i].annotation_indices(SourceType::kSF) == c[i].annotation_indices(SourceType::kSF));
  }
  CHECK(removed > 0);
  const auto labeled = labeled_sentences(spec, 40, 3);
  CHECK(labeled.size() == 40);
  std::size_t positives = 0;
  for (const auto& [s, label] : labeled) positives += label;
  CHECK(positives == 20);
}

TEST_CASE("corpus jsonl round trip and errors") {
  SyntheticSpec spec;
  spec.num_recordings = 10;
  Corpus c = generate_synthetic(spec, dsp::SpectrogramConfig{});
  Recording extra;
  extra.id = "file \"quoted\" \xc3\xa9";
  extra.audio = "audio/x.wav";
  extra.annotations = {{SourceType::kPL, "tab\there"}};
  c.add(extra);
  const auto path = std::filesystem::temp_directory_path() / "mulan_corpus.jsonl";
  save_corpus(c, path);
  const Corpus back = load_corpus(path);
  CHECK(back == c);
  CHECK(back.resolve_audio(*back.find(extra.id)) == path.parent_path() / "audio/x.wav");
  std::filesystem::remove(path);

  CHECK(parse_corpus("").empty());
  try {
    parse_corpus("{\"annotations\": []}\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"annotations\":[]}\n{\"id\":\"a\",\"annotations\":[]}\n"),
                  IntegrityError);
  CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"annotations\":[{\"source\":\"ZZ\",\"text\":\"x\"}]}\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_corpus("not json\n"), ParseError);

  const auto [head, tail] = split_corpus(c, 4);
  CHECK(head.size() == 4);
  CHECK(tail.size() == c.size() - 4);
  CHECK(tail[0] == c[4]);
}

TEST_CASE("aset pairs from labeled clips") {
  const auto recs = build_aset_pairs({{"a", std::nullopt, {"Rock", "Guitar"}},
                                      {"b", std::nullopt, {}},
                                      {"c", std::nullopt, {"Jazz", "Jazz"}}});
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].annotation_indices(SourceType::kASET).size() == 2);
  CHECK(recs[1].annotations.empty());
  CHECK(recs[2].annotations.size() == 1);
}

TEST_CASE("single-recording sampling edge cases") {
  Corpus c;
  Recording r;
  r.id = "only";
  r.synthetic_seed = 7;
  r.concepts = {0};
  r.annotations = {{SourceType::kSF, "hello"}};
  c.add(r);
  SyntheticSpec spec;
  spec.duration_seconds = 1.015;  // exactly 100 frames at 25/10 ms
  dsp::SpectrogramConfig mel;
  const FeatureStore fs = FeatureStore::compute(c, mel, &spec, 1);
  REQUIRE(fs[0].frames() == 100);
  const text::Vocabulary vocab = text::build_vocabulary(c.all_texts());
  SamplerConfig cfg;
  cfg.augment = false;
  const PairSampler sampler(c, fs, vocab, cfg);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const PairSample s = sampler.sample(SourceType::kSF, rng);
    CHECK(s.window.start_frame == 0);
    CHECK(s.annotation == 0);
  }
  CHECK_THROWS_AS(sampler.sample(SourceType::kLF, rng), SamplingError);
  CHECK_THROWS_AS(assemble_batch(sampler, MixingSpec::only(SourceType::kPL, 4), rng), BatchError);
}

TEST_CASE("recording selection is uniform") {
  SmallWorld world(4);
  SamplerConfig cfg;
  cfg.augment = false;
  const PairSampler sampler(world.corpus, world.features, world.vocab, cfg);
  std::mt19937_64 rng(99);
  std::map<std::size_t, std::size_t> counts;
  const std::size_t draws = 100000;
  for (std::size_t i = 0; i < draws; ++i) ++counts[sampler.sample(SourceType::kSF, rng).recording];
  const double p = 0.25, mean = draws * p, sigma = std::sqrt(draws * p * (1 - p));
  REQUIRE(counts.size() == 4);
  for (const auto& [rec, n] : counts) CHECK(std::abs(static_cast<double>(n) - mean) < 3.0 * sigma);
}

TEST_CASE("assembled batches have exact counts and provenance") {
  SmallWorld world(30);
  SamplerConfig cfg;
  cfg.augment = false;
  const PairSampler sampler(world.corpus, world.features, world.vocab, cfg);
  const MixingSpec mix = MixingSpec::from_ratio(64, {2, 2, 1, 1});
  std::mt19937_64 rng(5);
  for (int b = 0; b < 20; ++b) {
    const auto batch = assemble_batch(sampler, mix, rng);
    std::array<std::size_t, 4> seen{};
    for (const PairSample& s : batch) {
      ++seen[static_cast<std::size_t>(s.source)];
      const Recording& rec = world.corpus[s.recording];
      CHECK(s.window.source_id == rec.id);
      CHECK(rec.annotations[s.annotation].source == s.source);
      CHECK(s.tokens == text::tokenize(rec.annotations[s.annotation].text, world.vocab, cfg.max_tokens));
      CHECK(s.window.values ==
            dsp::extract_window(world.features[s.recording], s.window.start_frame, 100).values);
    }
    CHECK(seen == mix.counts);
  }
  std::mt19937_64 r1(8), r2(8);
  const auto x = assemble_batch(sampler, mix, r1, 1);
  const auto y = assemble_batch(sampler, mix, r2, 3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i].tokens == y[i].tokens);
    CHECK(x[i].window.values == y[i].window.values);
  }
}

TEST_CASE("clip segmentation") {
  dsp::LogMelSpectrogram s;
  s.values = nn::Tensor::matrix(4, 250, 1.0);
  bool padded = true;
  const auto segs = clip_segments(s, 100, &padded);
  CHECK(segs.size() == 2);
  CHECK_FALSE(padded);
  CHECK(segs[1].start_frame == 100);
  s.values = nn::Tensor::matrix(4, 60, 1.0);
  CHECK(clip_segments(s, 100, &padded).size() == 1);
  CHECK(padded);
}
