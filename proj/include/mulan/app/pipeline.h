// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_APP_PIPELINE_H_
#define MULAN_APP_PIPELINE_H_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "mulan/app/bundle.h"
#include "mulan/app/config.h"
#include "mulan/corpus/corpus.h"
#include "mulan/corpus/features.h"
#include "mulan/corpus/synthetic.h"
#include "mulan/eval/tasks.h"

namespace mulan::app {

// Generated corpus split at cfg.training.train_recordings, with features.
struct SyntheticData {
  corpus::Corpus all, train, eval;
  corpus::FeatureStore all_features, train_features, eval_features;
  corpus::Lexicon lexicon;
};

SyntheticData make_synthetic_data(const RunConfig& cfg);

// Features for a corpus whose synthetic recordings follow cfg.synthetic.
corpus::FeatureStore compute_features(const RunConfig& cfg, const corpus::Corpus& corpus);

// Concept-name tags over the eval recordings.
eval::Task synthetic_zero_shot_task(const corpus::Corpus& eval, const corpus::Lexicon& lex);
// Same tags; the first `train_clips` recordings of `train` form the probe's
// training split and every eval recording its eval split.
eval::Task synthetic_probe_task(const corpus::Corpus& train, std::size_t train_clips,
                                const corpus::Corpus& eval, const corpus::Lexicon& lex);
// Per concept: "<name> <short-form word> <short-form word>" phrases whose
// targets are the eval recordings carrying that concept.
eval::Task synthetic_retrieval_task(const corpus::Corpus& eval, const corpus::Lexicon& lex,
                                    std::size_t queries_per_concept, std::uint64_t seed);
// Anchor and positive describe one concept with disjoint halves of its
// long-form pool; the negative describes another concept the way the
// positive does, so lexical overlap never favours either side.
eval::Task synthetic_triplet_task(const corpus::SyntheticSpec& spec, const corpus::Lexicon& lex,
                                  std::size_t count, std::uint64_t seed);

// Runs one protocol. Clip ids are looked up in `clips`. The report holds
// "task", per-class or per-query metrics and "macro"; digests are left to
// the caller.
nlohmann::json run_task(const ModelBundle& model, const eval::Task& task, const corpus::Corpus& clips,
                        const corpus::FeatureStore& features, int workers);

}  // namespace mulan::app

#endif  // MULAN_APP_PIPELINE_H_
