// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/model/towers.h"

#include <cmath>

#include "mulan/error.h"
#include "mulan/nn/ops.h"
#include "mulan/text/vocabulary.h"

namespace mulan::model {
namespace {

using nn::Tape;
using nn::Tensor;
using nn::Var;

std::string block_prefix(const std::string& tower, std::size_t layer) {
  return tower + "/block" + std::to_string(layer) + "/";
}

Tensor truncated_normal(const nn::Shape& shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double x = normal(rng);
    while (std::abs(x) > 2.0 * stddev) x = normal(rng);
    t[i] = x;
  }
  return t;
}

void add_linear(nn::ParameterStore& store, const std::string& name, std::size_t in,
                std::size_t out, double stddev, std::mt19937_64& rng) {
  store.add(name + "/w", truncated_normal({in, out}, stddev, rng));
  store.add(name + "/b", Tensor({out}));
}

void add_norm(nn::ParameterStore& store, const std::string& name, std::size_t width) {
  store.add(name + "/g", Tensor({width}, 1.0));
  store.add(name + "/b", Tensor({width}));
}

void add_stack(nn::ParameterStore& store, const std::string& tower, const TowerConfig& cfg,
               double stddev, std::mt19937_64& rng) {
  const std::size_t h = cfg.hidden_dim;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string p = block_prefix(tower, l);
    add_norm(store, p + "ln1", h);
    // Key bias omitted: it shifts every logit of a query row equally.
    store.add(p + "attn/qkv/w", truncated_normal({h, 3 * h}, stddev, rng));
    store.add(p + "attn/qkv/b", Tensor({2 * h}));
    add_linear(store, p + "attn/out", h, h, stddev, rng);
    add_norm(store, p + "ln2", h);
    add_linear(store, p + "mlp/fc1", h, cfg.mlp_dim, stddev, rng);
    add_linear(store, p + "mlp/fc2", cfg.mlp_dim, h, stddev, rng);
  }
  add_norm(store, tower + "/ln_f", h);
  add_linear(store, tower + "/proj", h, cfg.embed_dim, stddev, rng);
}

Var bind_linear(Tape& tape, const nn::ParameterStore& store, const std::string& name, Var x) {
  return nn::linear(x, store.bind(tape, name + "/w"), store.bind(tape, name + "/b"));
}

Var bind_norm(Tape& tape, const nn::ParameterStore& store, const std::string& name, Var x) {
  return nn::layer_norm(x, store.bind(tape, name + "/g"), store.bind(tape, name + "/b"));
}

// Fused [Q | K | V] projection; the stored [b_q | b_v] bias is scattered
// around a zero key slot.
Var qkv_projection(Tape& tape, const nn::ParameterStore& store, const std::string& name, Var x) {
  const std::size_t h = x.shape().back();
  Tensor scatter = Tensor::matrix(2 * h, 3 * h);
  for (std::size_t i = 0; i < h; ++i) {
    scatter.at(i, i) = 1.0;
    scatter.at(h + i, 2 * h + i) = 1.0;
  }
  Var bias = nn::matmul(store.bind(tape, name + "/b"), tape.constant(std::move(scatter)));
  return nn::add_row(nn::matmul(x, store.bind(tape, name + "/w")), bias);
}

// Pre-norm blocks, final norm, [CLS] row, projection, l2 normalisation.
Var encode(Tape& tape, const nn::ParameterStore& store, const std::string& tower,
           const TowerConfig& cfg, Var x) {
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string p = block_prefix(tower, l);
    Var h = bind_norm(tape, store, p + "ln1", x);
    h = qkv_projection(tape, store, p + "attn/qkv", h);
    h = nn::masked_attention(h, cfg.num_heads);
    x = nn::add(x, bind_linear(tape, store, p + "attn/out", h));
    h = bind_norm(tape, store, p + "ln2", x);
    h = nn::gelu(bind_linear(tape, store, p + "mlp/fc1", h));
    x = nn::add(x, bind_linear(tape, store, p + "mlp/fc2", h));
  }
  Var cls = nn::take_row(bind_norm(tape, store, tower + "/ln_f", x), 0);
  return nn::l2_normalize(bind_linear(tape, store, tower + "/proj", cls));
}

Embedding row_of(const Var& v) {
  auto data = v.value().data();
  return Embedding(data.begin(), data.end());
}

}  // namespace

void TowerConfig::validate_common(const std::string& what) const {
  if (num_layers < 1 || hidden_dim < 1 || num_heads < 1 || mlp_dim < 1 || embed_dim < 1) {
    throw ConfigError(what + ": layers, widths, heads and embed_dim must be positive");
  }
  if (hidden_dim % num_heads != 0) {
    throw ConfigError(what + ": hidden_dim " + std::to_string(hidden_dim) +
                      " is not divisible by num_heads " + std::to_string(num_heads));
  }
}

void TowerConfig::validate_audio(std::size_t channels, std::size_t frames) const {
  validate_common("audio tower");
  if (patch_size < 1 || patch_stride < 1 || patch_stride > patch_size) {
    throw ConfigError("audio tower: need 1 <= patch_stride <= patch_size");
  }
  if (channels < patch_size || frames < patch_size) {
    throw SizeError("audio tower: window " + std::to_string(channels) + "x" +
                    std::to_string(frames) + " is smaller than one " +
                    std::to_string(patch_size) + "x" + std::to_string(patch_size) + " patch");
  }
}

void TowerConfig::validate_text() const {
  validate_common("text tower");
  if (vocab_size < 3) throw ConfigError("text tower: vocab_size must cover the reserved tokens");
  if (max_positions < 2) throw ConfigError("text tower: max_positions must be >= 2");
}

void ModelConfig::validate() const {
  audio.validate_audio(mel_channels, window_frames);
  text.validate_text();
  if (audio.embed_dim != text.embed_dim) {
    throw ConfigError("audio and text towers must share embed_dim");
  }
  if (!(init_std > 0.0)) throw ConfigError("init_std must be > 0");
}

std::size_t patch_count(std::size_t channels, std::size_t frames, std::size_t patch,
                        std::size_t stride) {
  if (patch == 0 || stride == 0) throw ConfigError("patch size and stride must be positive");
  if (channels < patch || frames < patch) {
    throw SizeError("window smaller than one patch");
  }
  return ((channels - patch) / stride + 1) * ((frames - patch) / stride + 1);
}

Tensor audio_patch_tokens(const dsp::ContextWindow& window, const TowerConfig& cfg) {
  const std::size_t f = window.channels();
  const std::size_t t = window.frames();
  const std::size_t ps = cfg.patch_size;
  const std::size_t st = cfg.patch_stride;
  const std::size_t count = patch_count(f, t, ps, st);
  Tensor out = Tensor::matrix(count, ps * ps);
  std::size_t row = 0;
  for (std::size_t r = 0; r + ps <= f; r += st) {
    for (std::size_t c = 0; c + ps <= t; c += st) {
      auto dst = out.row(row++);
      for (std::size_t i = 0; i < ps; ++i) {
        for (std::size_t j = 0; j < ps; ++j) dst[i * ps + j] = window.values.at(r + i, c + j);
      }
    }
  }
  return out;
}

void init_tower_parameters(nn::ParameterStore& store, const ModelConfig& cfg,
                           std::mt19937_64& rng) {
  cfg.validate();
  const double sd = cfg.init_std;
  const TowerConfig& a = cfg.audio;
  const std::size_t patches =
      patch_count(cfg.mel_channels, cfg.window_frames, a.patch_size, a.patch_stride);
  add_linear(store, "audio/patch", a.patch_size * a.patch_size, a.hidden_dim, sd, rng);
  store.add("audio/cls", truncated_normal({1, a.hidden_dim}, sd, rng));
  store.add("audio/pos", truncated_normal({patches + 1, a.hidden_dim}, sd, rng));
  add_stack(store, "audio", a, sd, rng);

  const TowerConfig& t = cfg.text;
  store.add("text/token", truncated_normal({t.vocab_size, t.hidden_dim}, sd, rng));
  store.add("text/pos", truncated_normal({t.max_positions, t.hidden_dim}, sd, rng));
  add_stack(store, "text", t, sd, rng);
}

Var audio_tower(Tape& tape, const nn::ParameterStore& store, const ModelConfig& cfg,
                const dsp::ContextWindow& window) {
  if (window.channels() != cfg.mel_channels || window.frames() != cfg.window_frames) {
    throw SizeError("audio tower expects a " + std::to_string(cfg.mel_channels) + "x" +
                    std::to_string(cfg.window_frames) + " window, got " +
                    std::to_string(window.channels()) + "x" + std::to_string(window.frames()));
  }
  Var patches = tape.constant(audio_patch_tokens(window, cfg.audio));
  Var x = bind_linear(tape, store, "audio/patch", patches);
  x = nn::concat_rows(store.bind(tape, "audio/cls"), x);
  x = nn::add(x, store.bind(tape, "audio/pos"));
  return encode(tape, store, "audio", cfg.audio, x);
}

Var text_tower(Tape& tape, const nn::ParameterStore& store, const ModelConfig& cfg,
               const text::TokenSequence& tokens) {
  const TowerConfig& t = cfg.text;
  if (tokens.ids.size() != tokens.attention_mask.size()) {
    throw ArgumentError("token ids and attention mask differ in length");
  }
  if (tokens.ids.size() > t.max_positions) {
    throw SizeError("token sequence of " + std::to_string(tokens.ids.size()) +
                    " exceeds max_positions " + std::to_string(t.max_positions));
  }
  if (tokens.ids.empty() || tokens.ids[0] != text::Vocabulary::kCls || !tokens.attention_mask[0]) {
    throw ArgumentError("token sequence must start with an unmasked [CLS]");
  }
  // Masked positions are dropped outright, so pads never reach any row.
  std::vector<int> ids;
  std::vector<int> positions;
  for (std::size_t i = 0; i < tokens.ids.size(); ++i) {
    if (!tokens.attention_mask[i]) continue;
    const int id = tokens.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= t.vocab_size) {
      throw VocabError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(t.vocab_size));
    }
    ids.push_back(id);
    positions.push_back(static_cast<int>(i));
  }
  Var x = nn::add(nn::embedding(store.bind(tape, "text/token"), ids),
                  nn::embedding(store.bind(tape, "text/pos"), positions));
  return encode(tape, store, "text", t, x);
}

Embedding embed_audio(const nn::ParameterStore& store, const ModelConfig& cfg,
                      const dsp::ContextWindow& window) {
  Tape tape;
  return row_of(audio_tower(tape, store, cfg, window));
}

Embedding embed_text(const nn::ParameterStore& store, const ModelConfig& cfg,
                     const text::TokenSequence& tokens) {
  Tape tape;
  return row_of(text_tower(tape, store, cfg, tokens));
}

Embedding embed_clip(const nn::ParameterStore& store, const ModelConfig& cfg,
                     std::span<const dsp::ContextWindow> segments) {
  if (segments.empty()) throw ArgumentError("embed_clip needs at least one segment");
  Embedding mean(cfg.embed_dim(), 0.0);
  for (const auto& seg : segments) {
    const Embedding e = embed_audio(store, cfg, seg);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e[i];
  }
  const double norm = l2_norm(mean);
  if (norm == 0.0) throw NumericError("clip embedding averaged to the zero vector");
  for (double& v : mean) v /= norm;
  return mean;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("cosine of vectors with different lengths");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

}  // namespace mulan::model
