// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_DSP_WAVEFORM_H_
#define MULAN_DSP_WAVEFORM_H_

#include <filesystem>
#include <vector>

namespace mulan::dsp {

inline constexpr int kInternalSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate_hz = kInternalSampleRate;

  // Throws LengthError if empty, ConfigError on a bad rate or non-finite samples.
  void validate() const;
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Linear-interpolation resampling.
Waveform resample_linear(const Waveform& in, int target_rate_hz);

// RIFF/WAVE, 16-bit PCM. Multi-channel input is averaged to mono.
Waveform read_wav(const std::filesystem::path& path);
// Reads and resamples to the internal rate.
Waveform load_audio(const std::filesystem::path& path);
// Mono 16-bit PCM; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace mulan::dsp

#endif  // MULAN_DSP_WAVEFORM_H_
