// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/app/config.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mulan/error.h"
#include "mulan/nn/checkpoint.h"

namespace mulan::app {
namespace {

using nlohmann::json;

template <typename T>
T convert(const json& v, const std::string& path) {
  auto fail = [&](const char* want) -> T {
    throw ConfigError("config: " + path + " must be " + want + ", got " + v.dump());
  };
  if constexpr (std::is_same_v<T, bool>) {
    return v.is_boolean() ? v.get<bool>() : fail("a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v.is_string() ? v.get<std::string>() : fail("a string");
  } else if constexpr (std::is_same_v<T, double>) {
    return v.is_number() ? v.get<double>() : fail("a number");
  } else if constexpr (std::is_same_v<T, int>) {
    return v.is_number_integer() ? v.get<int>() : fail("an integer");
  } else if constexpr (std::is_unsigned_v<T>) {
    return v.is_number_integer() && v.get<std::int64_t>() >= 0 ? v.get<T>() : fail("a non-negative integer");
  } else if constexpr (std::is_same_v<T, std::optional<std::size_t>>) {
    if (v.is_null()) return std::nullopt;
    return v.is_number_integer() && v.get<std::int64_t>() >= 0 ? T(v.get<std::size_t>())
                                                               : fail("null or a non-negative integer");
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    if (!v.is_array()) return fail("an array of strings");
    T out;
    for (const auto& e : v) out.push_back(convert<std::string>(e, path + "[]"));
    return out;
  } else if constexpr (std::is_same_v<T, std::array<double, 4>>) {
    if (!v.is_array() || v.size() != 4) return fail("an array of 4 numbers");
    T out;
    for (std::size_t i = 0; i < 4; ++i) out[i] = convert<double>(v[i], path + "[]");
    return out;
  } else {
    static_assert(sizeof(T) == 0, "unsupported config field type");
  }
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: " + path_ + " must be an object");
  }

  template <typename T>
  void field(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = convert<T>(j_[key], path_ + "." + key);
  }

  template <typename F>
  void object(const char* key, F&& body) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    Reader sub(j_[key], path_ + "." + key);
    body(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("config: unknown key " + path_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }

  template <typename T>
  void field(const char* key, const T& value) {
    if constexpr (std::is_same_v<T, std::optional<std::size_t>>) {
      j_[key] = value ? json(*value) : json(nullptr);
    } else {
      j_[key] = value;
    }
  }

  template <typename F>
  void object(const char* key, F&& body) {
    json sub;
    Writer w(sub);
    body(w);
    j_[key] = std::move(sub);
  }

 private:
  json& j_;
};

template <typename V>
void visit(V& v, dsp::SpectrogramConfig& c) {
  v.field("mel_channels", c.mel_channels);
  v.field("window_ms", c.window_ms);
  v.field("hop_ms", c.hop_ms);
  v.field("fft_size", c.fft_size);
  v.field("log_floor", c.log_floor);
  v.field("fmin_hz", c.mel_fmin_hz);
  v.field("fmax_hz", c.mel_fmax_hz);
}

template <typename V>
void visit(V& v, model::TowerConfig& c, bool audio) {
  v.field("num_layers", c.num_layers);
  v.field("hidden_dim", c.hidden_dim);
  v.field("num_heads", c.num_heads);
  v.field("mlp_dim", c.mlp_dim);
  v.field("embed_dim", c.embed_dim);
  if (audio) {
    v.field("patch_size", c.patch_size);
    v.field("patch_stride", c.patch_stride);
  } else {
    v.field("vocab_size", c.vocab_size);
    v.field("max_positions", c.max_positions);
  }
}

template <typename V>
void visit(V& v, dsp::SpecAugmentConfig& c) {
  v.field("num_freq_masks", c.num_freq_masks);
  v.field("min_freq_width", c.min_freq_width);
  v.field("max_freq_width", c.max_freq_width);
  v.field("num_time_masks", c.num_time_masks);
  v.field("min_time_width", c.min_time_width);
  v.field("max_time_width", c.max_time_width);
  v.field("mask_value", c.mask_value);
}

template <typename V>
void visit(V& v, corpus::SyntheticSpec& c) {
  v.field("num_concepts", c.num_concepts);
  v.field("num_recordings", c.num_recordings);
  v.field("min_concepts", c.min_concepts);
  v.field("max_concepts", c.max_concepts);
  v.field("noise_rate", c.noise_rate);
  v.field("distractor_rate", c.distractor_rate);
  v.field("playlist_coverage", c.playlist_coverage);
  v.field("aset_coverage", c.aset_coverage);
  v.field("pool_size", c.pool_size);
  v.field("noise_pool_size", c.noise_pool_size);
  v.field("duration_seconds", c.duration_seconds);
  v.field("min_amplitude", c.min_amplitude);
  v.field("max_amplitude", c.max_amplitude);
  v.field("noise_level", c.noise_level);
  v.field("seed", c.seed);
}

template <typename V>
void visit_loss(V& v, contrastive::LossConfig& c) {
  std::string denom = contrastive::denominator_name(c.denominator);
  v.field("denominator", denom);
  c.denominator = contrastive::parse_denominator(denom);
  v.field("tau_init", c.tau_init);
  v.field("tau_min", c.tau_min);
}

template <typename V>
void visit(V& v, RunConfig& c) {
  v.field("profile", c.profile);
  v.field("seed", c.seed);
  v.field("workers", c.workers);
  v.field("max_tokens", c.max_tokens);
  v.object("dsp", [&](auto& s) { visit(s, c.mel); });
  v.object("model", [&](auto& s) {
    s.field("window_frames", c.model.window_frames);
    s.field("init_std", c.model.init_std);
    s.object("audio", [&](auto& t) { visit(t, c.model.audio, true); });
    s.object("text", [&](auto& t) { visit(t, c.model.text, false); });
  });
  v.object("loss", [&](auto& s) { visit_loss(s, c.loss); });
  v.object("optimizer", [&](auto& s) {
    s.field("base_lr", c.optimizer.base_lr);
    s.field("decay_factor", c.optimizer.decay_factor);
    s.field("decay_every_steps", c.optimizer.decay_every_steps);
    s.field("beta1", c.optimizer.beta1);
    s.field("beta2", c.optimizer.beta2);
    s.field("epsilon", c.optimizer.epsilon);
  });
  v.object("training", [&](auto& s) {
    s.field("batch_size", c.training.batch_size);
    s.field("mixing", c.training.mixing);
    s.field("epochs", c.training.epochs);
    s.field("max_steps", c.training.max_steps);
    s.field("augment", c.training.augment);
    s.object("spec_augment", [&](auto& t) { visit(t, c.training.spec_augment); });
    s.field("train_recordings", c.training.train_recordings);
    s.field("checkpoint_every_epochs", c.training.checkpoint_every_epochs);
  });
  v.object("synthetic", [&](auto& s) { visit(s, c.synthetic); });
  v.object("filter", [&](auto& s) {
    s.field("lf_classifier", c.filter.lf_classifier);
    s.field("threshold", c.filter.threshold);
    s.field("labeled_sentences", c.filter.labeled_sentences);
    s.field("labeled_path", c.filter.labeled_path);
    s.object("sf_rules", [&](auto& t) {
      t.field("min_tokens", c.filter.sf_rules.min_tokens);
      t.field("max_tokens", c.filter.sf_rules.max_tokens);
      t.field("forbidden_patterns", c.filter.sf_rules.forbidden_patterns);
      t.field("deduplicate", c.filter.sf_rules.deduplicate);
    });
  });
  v.object("probe", [&](auto& s) {
    s.field("l2", c.probe.l2);
    s.field("epochs", c.probe.epochs);
    s.field("learning_rate", c.probe.learning_rate);
  });
}

}  // namespace

RunConfig desk_profile() {
  RunConfig c;
  c.profile = "desk";
  c.model.mel_channels = c.mel.mel_channels;
  c.model.window_frames = 100;
  c.model.text.max_positions = c.max_tokens;
  c.model.init_std = 0.1;
  c.optimizer.base_lr = 1e-3;
  c.optimizer.decay_factor = 0.5;
  c.optimizer.decay_every_steps = 1000;
  c.training.spec_augment.max_freq_width = 2;
  c.training.spec_augment.max_time_width = 10;
  c.training.augment = false;
  c.training.epochs = 125;  // 12 steps per epoch on 800 recordings
  return c;
}

RunConfig paper_profile() {
  RunConfig c;
  c.profile = "paper";
  c.mel.mel_channels = 128;
  c.max_tokens = 512;
  auto tower = [](model::TowerConfig& t) {
    t.num_layers = 12;
    t.hidden_dim = 768;
    t.num_heads = 12;
    t.mlp_dim = 3072;
    t.embed_dim = 128;
  };
  tower(c.model.audio);
  tower(c.model.text);
  c.model.audio.patch_size = 16;
  c.model.audio.patch_stride = 10;
  c.model.text.max_positions = 512;
  c.model.mel_channels = 128;
  c.model.window_frames = 1000;
  c.optimizer = nn::OptimizerConfig{};  // lr 4e-5, decay 0.9 every 40K steps
  c.training.batch_size = 5120;
  c.training.epochs = 14;
  c.training.spec_augment = dsp::SpecAugmentConfig{};
  return c;
}

void RunConfig::validate(bool need_vocab) const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  mel.validate(dsp::kInternalSampleRate);
  if (model.mel_channels != mel.mel_channels) {
    throw ConfigError("model.mel_channels (" + std::to_string(model.mel_channels) +
                      ") must equal dsp.mel_channels (" + std::to_string(mel.mel_channels) + ")");
  }
  if (model.text.max_positions != max_tokens) {
    throw ConfigError("model.text.max_positions (" + std::to_string(model.text.max_positions) +
                      ") must equal max_tokens (" + std::to_string(max_tokens) + ")");
  }
  model.audio.validate_audio(model.mel_channels, model.window_frames);
  model.text.validate_common("text tower");
  if (model.audio.embed_dim != model.text.embed_dim) {
    throw ConfigError("model.audio.embed_dim must equal model.text.embed_dim");
  }
  if (need_vocab) model.text.validate_text();
  if (max_tokens < 2) throw ConfigError("max_tokens must be >= 2");
  loss.validate();
  optimizer.validate();
  if (training.batch_size < 2) throw ConfigError("training.batch_size must be >= 2");
  if (training.epochs < 1) throw ConfigError("training.epochs must be >= 1");
  if (training.checkpoint_every_epochs < 1) {
    throw ConfigError("training.checkpoint_every_epochs must be >= 1");
  }
  double mix = 0.0;
  for (double r : training.mixing) {
    if (!(r >= 0.0)) throw ConfigError("training.mixing entries must be >= 0");
    mix += r;
  }
  if (!(mix > 0.0)) throw ConfigError("training.mixing must have a positive entry");
  if (training.augment) training.spec_augment.validate(model.mel_channels, model.window_frames);
  synthetic.validate();
  if (training.train_recordings > synthetic.num_recordings) {
    throw ConfigError("training.train_recordings exceeds synthetic.num_recordings");
  }
  filter.sf_rules.validate();
  if (!(filter.threshold >= 0.0 && filter.threshold <= 1.0)) {
    throw ConfigError("filter.threshold must lie in [0, 1]");
  }
  if (probe.epochs < 1 || !(probe.learning_rate > 0.0) || !(probe.l2 >= 0.0)) {
    throw ConfigError("probe needs epochs >= 1, learning_rate > 0, l2 >= 0");
  }
}

json to_json(const RunConfig& cfg) {
  RunConfig copy = cfg;
  json j;
  Writer w(j);
  visit(w, copy);
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::string profile = "desk";
  if (j.contains("profile")) profile = convert<std::string>(j["profile"], "profile");
  RunConfig cfg;
  if (profile == "desk") {
    cfg = desk_profile();
  } else if (profile == "paper") {
    cfg = paper_profile();
  } else {
    throw ConfigError("config: profile must be desk or paper, got '" + profile + "'");
  }
  Reader r(j, "config");
  try {
    visit(r, cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  r.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string config_text(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::string config_digest(const RunConfig& cfg) {
  const std::string text = config_text(cfg);
  const auto crc = nn::crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

}  // namespace mulan::app
