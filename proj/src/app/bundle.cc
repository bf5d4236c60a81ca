// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/app/bundle.h"

#include "mulan/error.h"
#include "mulan/parallel.h"
#include "mulan/text/tokenizer.h"

namespace mulan::app {

using nlohmann::json;

std::string bundle_payload(const RunConfig& cfg, const text::Vocabulary& vocab) {
  return json{{"config", to_json(cfg)}, {"vocab", vocab.tokens()}}.dump();
}

ModelBundle bundle_from_checkpoint(const nn::Checkpoint& ckpt) {
  json j;
  try {
    j = json::parse(ckpt.config_json);
  } catch (const json::exception& e) {
    throw LoadError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (!j.contains("config") || !j.contains("vocab") || !j["vocab"].is_array()) {
    throw LoadError("checkpoint config lacks config or vocab");
  }
  ModelBundle b;
  b.config = config_from_json(j["config"]);
  b.vocab = text::Vocabulary::from_tokens(j["vocab"].get<std::vector<std::string>>());
  if (b.config.model.text.vocab_size != b.vocab.size()) {
    throw LoadError("checkpoint vocabulary size does not match its text tower");
  }
  b.config.validate(true);
  b.params = ckpt.params;
  return b;
}

ModelBundle load_bundle(const std::filesystem::path& checkpoint_path) {
  ModelBundle b = bundle_from_checkpoint(nn::load_checkpoint(checkpoint_path));
  b.digest = nn::file_digest(checkpoint_path);
  return b;
}

model::Embedding embed_text_string(const ModelBundle& model, const std::string& text) {
  return model::embed_text(model.params, model.config.model,
                           text::tokenize(text, model.vocab, model.config.max_tokens));
}

std::vector<model::Embedding> embed_clips(const ModelBundle& model, const corpus::Corpus& corpus,
                                          const corpus::FeatureStore& features, int workers,
                                          std::vector<std::string>* padded) {
  if (features.size() != corpus.size()) throw ArgumentError("features do not match corpus");
  std::vector<model::Embedding> out(corpus.size());
  std::vector<char> short_clip(corpus.size(), 0);
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    bool pad = false;
    const auto segments = corpus::clip_segments(features[i], model.config.model.window_frames, &pad);
    short_clip[i] = pad;
    out[i] = model::embed_clip(model.params, model.config.model, segments);
  });
  if (padded) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (short_clip[i]) padded->push_back(corpus[i].id);
    }
  }
  return out;
}

std::vector<model::Embedding> embed_texts(const ModelBundle& model,
                                          const std::vector<std::string>& texts, int workers) {
  std::vector<model::Embedding> out(texts.size());
  parallel_for(texts.size(), workers, [&](std::size_t i) { out[i] = embed_text_string(model, texts[i]); });
  return out;
}

}  // namespace mulan::app
