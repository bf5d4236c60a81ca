// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/dsp/context_window.h"

#include <algorithm>
#include <random>
#include <string>

#include "mulan/error.h"

namespace mulan::dsp {

ContextWindow extract_window(const LogMelSpectrogram& spec, std::size_t start_frame,
                             std::size_t frames, std::string source_id) {
  const std::size_t total = spec.frames();
  if (frames == 0 || start_frame > total || frames > total - start_frame) {
    throw RangeError("window [" + std::to_string(start_frame) + ", " +
                     std::to_string(start_frame + frames) + ") exceeds " +
                     std::to_string(total) + " frames");
  }
  const std::size_t channels = spec.channels();
  ContextWindow w;
  w.values = nn::Tensor::matrix(channels, frames);
  for (std::size_t m = 0; m < channels; ++m) {
    const double* src = spec.values.raw() + m * total + start_frame;
    std::copy(src, src + frames, w.values.raw() + m * frames);
  }
  w.source_id = std::move(source_id);
  w.start_frame = start_frame;
  return w;
}

ContextWindow pad_or_trim_to_window(const LogMelSpectrogram& spec, std::size_t frames,
                                    std::string source_id) {
  const std::size_t total = spec.frames();
  if (total >= frames) {
    return extract_window(spec, (total - frames) / 2, frames, std::move(source_id));
  }
  const std::size_t channels = spec.channels();
  ContextWindow w;
  w.values = nn::Tensor::matrix(channels, frames, spec.floor_value());
  for (std::size_t m = 0; m < channels; ++m) {
    const double* src = spec.values.raw() + m * total;
    std::copy(src, src + total, w.values.raw() + m * frames);
  }
  w.source_id = std::move(source_id);
  w.start_frame = 0;
  return w;
}

void SpecAugmentConfig::validate(std::size_t channels, std::size_t frames) const {
  if (min_freq_width > max_freq_width || min_time_width > max_time_width) {
    throw ConfigError("spec_augment: min width exceeds max width");
  }
  if (max_freq_width > channels) throw ConfigError("spec_augment.max_freq_width exceeds F");
  if (max_time_width > frames) throw ConfigError("spec_augment.max_time_width exceeds T");
}

ContextWindow spec_augment(const ContextWindow& window, const SpecAugmentConfig& cfg,
                           std::uint64_t seed) {
  const std::size_t channels = window.channels();
  const std::size_t frames = window.frames();
  cfg.validate(channels, frames);
  ContextWindow out = window;
  std::mt19937_64 rng(seed);
  auto draw = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (std::size_t i = 0; i < cfg.num_freq_masks; ++i) {
    const std::size_t width = draw(cfg.min_freq_width, cfg.max_freq_width);
    const std::size_t start = draw(0, channels - width);
    for (std::size_t m = start; m < start + width; ++m) {
      std::fill_n(out.values.raw() + m * frames, frames, cfg.mask_value);
    }
  }
  for (std::size_t i = 0; i < cfg.num_time_masks; ++i) {
    const std::size_t width = draw(cfg.min_time_width, cfg.max_time_width);
    const std::size_t start = draw(0, frames - width);
    for (std::size_t m = 0; m < channels; ++m) {
      std::fill_n(out.values.raw() + m * frames + start, width, cfg.mask_value);
    }
  }
  return out;
}

}  // namespace mulan::dsp
