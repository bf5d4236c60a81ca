// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_APP_BUNDLE_H_
#define MULAN_APP_BUNDLE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "mulan/app/config.h"
#include "mulan/corpus/corpus.h"
#include "mulan/corpus/features.h"
#include "mulan/nn/checkpoint.h"
#include "mulan/nn/parameter_store.h"
#include "mulan/text/vocabulary.h"

namespace mulan::app {

// A trained or initialised model with everything needed to run it.
struct ModelBundle {
  RunConfig config;
  text::Vocabulary vocab;
  nn::ParameterStore params;
  std::string digest;  // checkpoint file digest, empty if not loaded from disk
};

// Checkpoint config payload: {"config": RunConfig, "vocab": [tokens]}.
std::string bundle_payload(const RunConfig& cfg, const text::Vocabulary& vocab);
ModelBundle bundle_from_checkpoint(const nn::Checkpoint& ckpt);
ModelBundle load_bundle(const std::filesystem::path& checkpoint_path);

model::Embedding embed_text_string(const ModelBundle& model, const std::string& text);

// Clip embedding of every recording (non-overlapping segments, averaged).
// `padded` receives the ids of recordings shorter than one window.
std::vector<model::Embedding> embed_clips(const ModelBundle& model, const corpus::Corpus& corpus,
                                          const corpus::FeatureStore& features, int workers,
                                          std::vector<std::string>* padded = nullptr);
std::vector<model::Embedding> embed_texts(const ModelBundle& model,
                                          const std::vector<std::string>& texts, int workers);

}  // namespace mulan::app

#endif  // MULAN_APP_BUNDLE_H_
