// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_DSP_CONTEXT_WINDOW_H_
#define MULAN_DSP_CONTEXT_WINDOW_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "mulan/dsp/spectrogram.h"
#include "mulan/nn/tensor.h"

namespace mulan::dsp {

// Fixed [F, T] slab of a log-mel spectrogram, the audio tower's input.
struct ContextWindow {
  nn::Tensor values;
  std::string source_id;
  std::size_t start_frame = 0;

  std::size_t channels() const { return values.shape()[0]; }
  std::size_t frames() const { return values.shape()[1]; }
};

// Exact copy of frames [start, start + T). Throws RangeError if it does not fit.
ContextWindow extract_window(const LogMelSpectrogram& spec, std::size_t start_frame,
                             std::size_t frames, std::string source_id = {});

// Centre-trims to T frames, or right-pads with log(floor) columns.
ContextWindow pad_or_trim_to_window(const LogMelSpectrogram& spec, std::size_t frames,
                                    std::string source_id = {});

struct SpecAugmentConfig {
  std::size_t num_freq_masks = 2;
  std::size_t min_freq_width = 0;
  std::size_t max_freq_width = 8;
  std::size_t num_time_masks = 2;
  std::size_t min_time_width = 0;
  std::size_t max_time_width = 100;
  double mask_value = std::log(1e-6);

  // Throws ConfigError if widths exceed the window or min > max.
  void validate(std::size_t channels, std::size_t frames) const;
};

// Frequency masks then time masks; each width ~ U{min, max} and offset
// ~ U{0, extent - width} from a generator seeded with `seed`.
ContextWindow spec_augment(const ContextWindow& window, const SpecAugmentConfig& cfg,
                           std::uint64_t seed);

}  // namespace mulan::dsp

#endif  // MULAN_DSP_CONTEXT_WINDOW_H_
