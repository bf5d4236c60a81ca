// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/dsp/spectrogram.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "mulan/error.h"
#include "mulan/simd/kernels.h"

namespace mulan::dsp {

std::size_t SpectrogramConfig::window_length(int sample_rate_hz) const {
  return static_cast<std::size_t>(std::lround(window_ms * sample_rate_hz / 1000.0));
}

std::size_t SpectrogramConfig::hop_length(int sample_rate_hz) const {
  return static_cast<std::size_t>(std::lround(hop_ms * sample_rate_hz / 1000.0));
}

void SpectrogramConfig::validate(int sample_rate_hz) const {
  if (mel_channels == 0) throw ConfigError("spectrogram.mel_channels must be positive");
  if (!(hop_ms > 0.0)) throw ConfigError("spectrogram.hop_ms must be positive");
  if (window_ms < hop_ms) throw ConfigError("spectrogram.window_ms must be >= hop_ms");
  if (hop_length(sample_rate_hz) == 0) throw ConfigError("spectrogram hop rounds to 0 samples");
  if (fft_size < window_length(sample_rate_hz)) {
    throw ConfigError("spectrogram.fft_size " + std::to_string(fft_size) +
                      " is shorter than the window (" +
                      std::to_string(window_length(sample_rate_hz)) + " samples)");
  }
  if (!(log_floor > 0.0)) throw ConfigError("spectrogram.log_floor must be positive");
  if (!(mel_fmin_hz >= 0.0 && mel_fmin_hz < mel_fmax_hz &&
        mel_fmax_hz <= sample_rate_hz / 2.0)) {
    throw ConfigError("spectrogram mel range must satisfy 0 <= fmin < fmax <= sample_rate/2");
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(const SpectrogramConfig& cfg, int sample_rate_hz) {
  cfg.validate(sample_rate_hz);
  const std::size_t bands = cfg.mel_channels;
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const double lo = hz_to_mel(cfg.mel_fmin_hz);
  const double hi = hz_to_mel(cfg.mel_fmax_hz);
  edges_hz_.resize(bands + 2);
  for (std::size_t i = 0; i < bands + 2; ++i) {
    edges_hz_[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (bands + 1));
  }
  weights_ = nn::Tensor::matrix(bands, bins);
  for (std::size_t m = 0; m < bands; ++m) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate_hz / cfg.fft_size;
      weights_.at(m, k) = response(m, hz);
    }
  }
}

double MelFilterbank::response(std::size_t band, double hz) const {
  const double lo = edges_hz_[band];
  const double center = edges_hz_[band + 1];
  const double hi = edges_hz_[band + 2];
  if (hz <= lo || hz >= hi) return 0.0;
  if (hz <= center) return (hz - lo) / (center - lo);
  return (hi - hz) / (hi - center);
}

double LogMelSpectrogram::floor_value() const { return std::log(config.log_floor); }

std::size_t frame_count(std::size_t num_samples, const SpectrogramConfig& cfg, int sample_rate_hz) {
  const std::size_t win = cfg.window_length(sample_rate_hz);
  const std::size_t hop = cfg.hop_length(sample_rate_hz);
  if (num_samples < win) return 0;
  return (num_samples - win) / hop + 1;
}

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
class RealFft {
 public:
  static const RealFft& get(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot.reset(new RealFft(n));
    return *slot;
  }

  struct Buffers {
    std::unique_ptr<double, decltype(&fftw_free)> in{nullptr, fftw_free};
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> spec{nullptr, fftw_free};
  };

  Buffers buffers() const {
    Buffers b;
    b.in.reset(fftw_alloc_real(n_));
    b.spec.reset(fftw_alloc_complex(n_ / 2 + 1));
    return b;
  }

  // Power spectrum |X_k|^2, k = 0..n/2, of the frame held in `b.in`.
  void power(Buffers& b, double* out) const {
    fftw_execute_dft_r2c(plan_, b.in.get(), b.spec.get());
    const fftw_complex* spec = b.spec.get();
    for (std::size_t k = 0; k <= n_ / 2; ++k) {
      out[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    }
  }

 private:
  explicit RealFft(std::size_t n) : n_(n) {
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(out);
    fftw_free(in);
  }

  std::size_t n_;
  fftw_plan plan_;
};

const MelFilterbank& cached_filterbank(const SpectrogramConfig& cfg, int rate) {
  static std::mutex mutex;
  static std::vector<std::pair<std::pair<SpectrogramConfig, int>, std::unique_ptr<MelFilterbank>>>
      cache;
  std::lock_guard<std::mutex> lock(mutex);
  for (const auto& [key, fb] : cache) {
    if (key.first == cfg && key.second == rate) return *fb;
  }
  cache.emplace_back(std::make_pair(cfg, rate), std::make_unique<MelFilterbank>(cfg, rate));
  return *cache.back().second;
}

}  // namespace

LogMelSpectrogram compute_log_mel(const Waveform& wave, const SpectrogramConfig& cfg) {
  wave.validate();
  const int rate = wave.sample_rate_hz;
  cfg.validate(rate);
  const std::size_t win = cfg.window_length(rate);
  const std::size_t hop = cfg.hop_length(rate);
  const std::size_t frames = frame_count(wave.samples.size(), cfg, rate);
  if (frames == 0) {
    throw LengthError("waveform of " + std::to_string(wave.samples.size()) +
                      " samples is shorter than one window (" + std::to_string(win) + ")");
  }
  const std::size_t bins = cfg.fft_size / 2 + 1;
  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / win);
  }
  // Power spectra stored bin-major [bins, frames] so the filterbank is one gemm.
  std::vector<double> power(bins * frames);
  std::vector<double> column(bins);
  const RealFft& fft = RealFft::get(cfg.fft_size);
  RealFft::Buffers buf = fft.buffers();
  double* frame = buf.in.get();
  std::fill(frame, frame + cfg.fft_size, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* src = wave.samples.data() + f * hop;
    for (std::size_t i = 0; i < win; ++i) frame[i] = src[i] * hann[i];
    fft.power(buf, column.data());
    for (std::size_t k = 0; k < bins; ++k) power[k * frames + f] = column[k];
  }
  const MelFilterbank& fb = cached_filterbank(cfg, rate);
  LogMelSpectrogram out;
  out.config = cfg;
  out.values = nn::Tensor::matrix(cfg.mel_channels, frames);
  simd::active().gemm_nn(cfg.mel_channels, frames, bins, fb.weights().raw(), power.data(),
                         out.values.raw());
  for (double& v : out.values.data()) v = std::log(cfg.log_floor + v);
  return out;
}

namespace {
constexpr char kSpecMagic[8] = {'M', 'L', 'S', 'P', 'E', 'C', '0', '1'};
}

void write_spectrogram(const std::filesystem::path& path, const LogMelSpectrogram& spec) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto f = static_cast<std::uint32_t>(spec.channels());
  const auto n = static_cast<std::uint32_t>(spec.frames());
  out.write(kSpecMagic, 8);
  out.write(reinterpret_cast<const char*>(&f), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(spec.values.raw()),
            static_cast<std::streamsize>(spec.values.size() * sizeof(double)));
  if (!out) throw IoError("short write to " + path.string());
}

nn::Tensor read_spectrogram(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<char> bytes(std::istreambuf_iterator<char>(in), {});
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kSpecMagic, 8) != 0) {
    throw ParseError(path.string() + ": not an MLSPEC01 file");
  }
  std::uint32_t f, n;
  std::memcpy(&f, bytes.data() + 8, 4);
  std::memcpy(&n, bytes.data() + 12, 4);
  const std::size_t count = static_cast<std::size_t>(f) * n;
  if (bytes.size() != 16 + count * sizeof(double)) {
    throw ParseError(path.string() + ": payload size does not match header");
  }
  std::vector<double> data(count);
  std::memcpy(data.data(), bytes.data() + 16, count * sizeof(double));
  return nn::Tensor(nn::Shape{f, n}, std::move(data));
}

}  // namespace mulan::dsp
