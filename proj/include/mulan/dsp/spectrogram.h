// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_DSP_SPECTROGRAM_H_
#define MULAN_DSP_SPECTROGRAM_H_

#include <cstddef>
#include <filesystem>
#include <vector>

#include "mulan/dsp/waveform.h"
#include "mulan/nn/tensor.h"

namespace mulan::dsp {

struct SpectrogramConfig {
  std::size_t mel_channels = 32;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t fft_size = 512;
  double log_floor = 1e-6;
  double mel_fmin_hz = 0.0;
  double mel_fmax_hz = 8000.0;

  std::size_t window_length(int sample_rate_hz) const;
  std::size_t hop_length(int sample_rate_hz) const;
  // Throws ConfigError; the rate is needed for the Nyquist and FFT checks.
  void validate(int sample_rate_hz) const;
  bool operator==(const SpectrogramConfig&) const = default;
};

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular HTK filters without area normalisation, [mel_channels, fft/2 + 1].
class MelFilterbank {
 public:
  MelFilterbank(const SpectrogramConfig& cfg, int sample_rate_hz);

  const nn::Tensor& weights() const { return weights_; }
  // Peak frequency of band m.
  double center_hz(std::size_t band) const { return edges_hz_[band + 1]; }
  // Response of band m to a pure tone at `hz`, evaluated on the continuous
  // triangle (not on FFT bins).
  double response(std::size_t band, double hz) const;
  std::size_t bands() const { return edges_hz_.size() - 2; }

 private:
  nn::Tensor weights_;
  std::vector<double> edges_hz_;
};

// Log-mel spectrogram as an [F, num_frames] tensor plus the config that made it.
struct LogMelSpectrogram {
  nn::Tensor values;
  SpectrogramConfig config;

  std::size_t channels() const { return values.shape()[0]; }
  std::size_t frames() const { return values.shape()[1]; }
  double floor_value() const;
};

// floor((samples - window) / hop) + 1, or 0 if shorter than one window.
std::size_t frame_count(std::size_t num_samples, const SpectrogramConfig& cfg, int sample_rate_hz);

// Hann-windowed power spectrum through the mel filterbank:
// entry (m, k) = log(log_floor + mel power of frame k in band m).
// Throws LengthError if the waveform is shorter than one window.
LogMelSpectrogram compute_log_mel(const Waveform& wave, const SpectrogramConfig& cfg);

// Little-endian dump: "MLSPEC01", u32 F, u32 frames, then f64 row-major.
void write_spectrogram(const std::filesystem::path& path, const LogMelSpectrogram& spec);
nn::Tensor read_spectrogram(const std::filesystem::path& path);

}  // namespace mulan::dsp

#endif  // MULAN_DSP_SPECTROGRAM_H_
