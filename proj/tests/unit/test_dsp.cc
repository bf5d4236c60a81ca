// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mulan/dsp/context_window.h"
#include "mulan/dsp/spectrogram.h"
#include "mulan/dsp/waveform.h"
#include "mulan/error.h"

using namespace mulan;
using namespace mulan::dsp;

namespace {

Waveform tone(double hz, double seconds, double amp = 0.5) {
  Waveform w;
  const auto n = static_cast<std::size_t>(seconds * kInternalSampleRate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / kInternalSampleRate);
  }
  return w;
}

// Triangle weight of HTK mel band m at frequency hz, from first principles.
double oracle_weight(const SpectrogramConfig& c, std::size_t m, double hz) {
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto inv = [](double x) { return 700.0 * (std::pow(10.0, x / 2595.0) - 1.0); };
  const double lo_mel = mel(c.mel_fmin_hz), hi_mel = mel(c.mel_fmax_hz);
  const double step = (hi_mel - lo_mel) / static_cast<double>(c.mel_channels + 1);
  const double a = inv(lo_mel + step * m), b = inv(lo_mel + step * (m + 1)), d = inv(lo_mel + step * (m + 2));
  if (hz <= a || hz >= d) return 0.0;
  return hz <= b ? (hz - a) / (b - a) : (d - hz) / (d - b);
}

}  // namespace

TEST_CASE("mel scale round trip") {
  for (double hz : {0.0, 100.0, 1000.0, 4321.0, 8000.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz));
  CHECK(hz_to_mel(1000.0) == doctest::Approx(1000.0).epsilon(1e-3));
}

TEST_CASE("frame count follows the window/hop formula") {
  SpectrogramConfig c;
  CHECK(c.window_length(16000) == 400);
  CHECK(c.hop_length(16000) == 160);
  CHECK(frame_count(16000, c, 16000) == 98);
  CHECK(frame_count(399, c, 16000) == 0);
  CHECK(frame_count(400, c, 16000) == 1);
  CHECK(frame_count(560, c, 16000) == 2);
  Waveform short_wave;
  short_wave.samples.assign(100, 0.0);
  CHECK_THROWS_AS(compute_log_mel(short_wave, c), LengthError);
}

TEST_CASE("log-mel matches a direct DFT oracle") {
  SpectrogramConfig c;
  c.mel_channels = 16;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Waveform w;
  w.samples.resize(400 + 160 * 3);
  for (double& s : w.samples) s = u(rng);
  const LogMelSpectrogram spec = compute_log_mel(w, c);
  REQUIRE(spec.frames() == 4);
  REQUIRE(spec.channels() == 16);
  const std::size_t n = c.fft_size, win = 400;
  for (std::size_t f = 0; f < spec.frames(); ++f) {
    std::vector<double> frame(n, 0.0);
    for (std::size_t i = 0; i < win; ++i) {
      const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
      frame[i] = w.samples[f * 160 + i] * hann;
    }
    std::vector<double> power(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / n;
        re += frame[t] * std::cos(ang);
        im += frame[t] * std::sin(ang);
      }
      power[k] = re * re + im * im;
    }
    for (std::size_t m = 0; m < 16; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k <= n / 2; ++k) e += oracle_weight(c, m, k * 16000.0 / n) * power[k];
      CHECK(spec.values.at(m, f) == doctest::Approx(std::log(1e-6 + e)).epsilon(1e-9));
    }
  }
}

TEST_CASE("a tone at a band centre peaks in that band") {
  SpectrogramConfig c;
  const MelFilterbank bank(c, kInternalSampleRate);
  for (std::size_t band = 2; band + 2 < c.mel_channels; ++band) {
    const LogMelSpectrogram spec = compute_log_mel(tone(bank.center_hz(band), 0.3), c);
    for (std::size_t f = 0; f < spec.frames(); ++f) {
      std::size_t best = 0;
      for (std::size_t m = 1; m < spec.channels(); ++m) {
        if (spec.values.at(m, f) > spec.values.at(best, f)) best = m;
      }
      CHECK(best == band);
    }
  }
}

TEST_CASE("silence sits at the log floor") {
  SpectrogramConfig c;
  Waveform w;
  w.samples.assign(1600, 0.0);
  const LogMelSpectrogram spec = compute_log_mel(w, c);
  for (double v : spec.values.data()) CHECK(v == doctest::Approx(std::log(1e-6)));
}

TEST_CASE("filterbank rows are non-negative triangles peaking at 1") {
  SpectrogramConfig c;
  const MelFilterbank bank(c, kInternalSampleRate);
  CHECK(bank.bands() == c.mel_channels);
  for (std::size_t m = 0; m < bank.bands(); ++m) {
    CHECK(bank.response(m, bank.center_hz(m)) == doctest::Approx(1.0));
    for (double w : bank.weights().row(m)) CHECK(w >= 0.0);
  }
}

TEST_CASE("spectrogram config validation") {
  SpectrogramConfig c;
  c.mel_fmax_hz = 9000.0;
  CHECK_THROWS_AS(c.validate(16000), ConfigError);
  c = SpectrogramConfig{};
  c.fft_size = 256;  // shorter than the 400-sample window
  CHECK_THROWS_AS(c.validate(16000), ConfigError);
}

TEST_CASE("wav round trip, multichannel average and resampling") {
  const auto path = std::filesystem::temp_directory_path() / "mulan_test.wav";
  const Waveform w = tone(440.0, 0.1, 0.8);
  write_wav(path, w);
  const Waveform back = read_wav(path);
  REQUIRE(back.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) CHECK(std::abs(back.samples[i] - w.samples[i]) <= 0.5 / 32768.0 + 1e-12);
  std::filesystem::remove(path);

  Waveform w8 = w;
  w8.sample_rate_hz = 8000;
  const Waveform up = resample_linear(w8, 16000);
  CHECK(up.sample_rate_hz == 16000);
  CHECK(std::abs(static_cast<double>(up.samples.size()) - 2.0 * w8.samples.size()) <= 2.0);
  CHECK_THROWS_AS(read_wav(std::filesystem::temp_directory_path() / "does_not_exist.wav"), Error);
}

TEST_CASE("spectrogram file round trip") {
  const LogMelSpectrogram spec = compute_log_mel(tone(1000.0, 0.2), SpectrogramConfig{});
  const auto path = std::filesystem::temp_directory_path() / "mulan_test.mlspec";
  write_spectrogram(path, spec);
  CHECK(read_spectrogram(path) == spec.values);
  std::filesystem::remove(path);
}

TEST_CASE("context windows: exact extraction, bounds, centre trim and padding") {
  LogMelSpectrogram spec;
  spec.values = nn::Tensor::matrix(4, 10);
  for (std::size_t i = 0; i < spec.values.size(); ++i) spec.values[i] = static_cast<double>(i);
  const ContextWindow w = extract_window(spec, 3, 5, "r");
  CHECK(w.channels() == 4);
  CHECK(w.frames() == 5);
  CHECK(w.values.at(2, 0) == spec.values.at(2, 3));
  CHECK(w.source_id == "r");
  CHECK(extract_window(spec, 0, 10).values == spec.values);
  CHECK_THROWS_AS(extract_window(spec, 6, 5), RangeError);

  const ContextWindow trimmed = pad_or_trim_to_window(spec, 6);
  CHECK(trimmed.start_frame == 2);
  CHECK(trimmed.values.at(0, 0) == spec.values.at(0, 2));
  const ContextWindow padded = pad_or_trim_to_window(spec, 12);
  CHECK(padded.values.at(1, 9) == spec.values.at(1, 9));
  CHECK(padded.values.at(1, 11) == doctest::Approx(std::log(1e-6)));
}

TEST_CASE("spec augment masks bands and spans deterministically") {
  LogMelSpectrogram spec;
  spec.values = nn::Tensor::matrix(32, 100, 1.0);
  const ContextWindow w = extract_window(spec, 0, 100);
  SpecAugmentConfig cfg;
  cfg.num_freq_masks = 1;
  cfg.min_freq_width = cfg.max_freq_width = 3;
  cfg.num_time_masks = 1;
  cfg.min_time_width = cfg.max_time_width = 7;
  const ContextWindow a = spec_augment(w, cfg, 17);
  const ContextWindow b = spec_augment(w, cfg, 17);
  CHECK(a.values == b.values);
  std::size_t masked_rows = 0, masked_cols = 0;
  for (std::size_t r = 0; r < 32; ++r) {
    bool all = true;
    for (std::size_t c = 0; c < 100; ++c) all = all && a.values.at(r, c) == cfg.mask_value;
    masked_rows += all;
  }
  for (std::size_t c = 0; c < 100; ++c) {
    bool all = true;
    for (std::size_t r = 0; r < 32; ++r) all = all && a.values.at(r, c) == cfg.mask_value;
    masked_cols += all;
  }
  CHECK(masked_rows == 3);
  CHECK(masked_cols == 7);

  SpecAugmentConfig none;
  none.num_freq_masks = none.num_time_masks = 0;
  CHECK(spec_augment(w, none, 1).values == w.values);
  SpecAugmentConfig too_wide;
  too_wide.max_freq_width = 40;
  CHECK_THROWS_AS(too_wide.validate(32, 100), ConfigError);
}
