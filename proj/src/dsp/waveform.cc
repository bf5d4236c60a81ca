// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/dsp/waveform.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mulan/error.h"

namespace mulan::dsp {

void Waveform::validate() const {
  if (samples.empty()) throw LengthError("waveform is empty");
  if (sample_rate_hz <= 0) throw ConfigError("waveform sample rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw ConfigError("waveform contains a non-finite sample");
  }
}

Waveform resample_linear(const Waveform& in, int target_rate_hz) {
  if (target_rate_hz <= 0) throw ConfigError("target sample rate must be positive");
  if (in.sample_rate_hz == target_rate_hz || in.samples.empty()) {
    Waveform out = in;
    out.sample_rate_hz = target_rate_hz;
    return out;
  }
  const double ratio = static_cast<double>(in.sample_rate_hz) / target_rate_hz;
  const std::size_t n_in = in.samples.size();
  const auto n_out = static_cast<std::size_t>(
      std::floor(static_cast<double>(n_in - 1) / ratio)) + 1;
  Waveform out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto left = std::min(static_cast<std::size_t>(pos), n_in - 1);
    const std::size_t right = std::min(left + 1, n_in - 1);
    const double frac = pos - static_cast<double>(left);
    out.samples[i] = in.samples[left] * (1.0 - frac) + in.samples[right] * frac;
  }
  return out;
}

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file " + path.string());
  const std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
  const std::string where = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ParseError(where + ": not a RIFF/WAVE file");
  }
  int channels = 0, rate = 0, bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = le32(&bytes[pos + 4]);
    const std::uint8_t* body = &bytes[pos + 8];
    const std::size_t avail = bytes.size() - pos - 8;
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      if (len < 16 || avail < 16) throw ParseError(where + ": short fmt chunk");
      std::uint16_t format = le16(body);
      if (format == 0xFFFE && len >= 40 && avail >= 40) format = le16(body + 24);
      if (format != 1) throw ParseError(where + ": only PCM WAV is supported");
      channels = le16(body + 2);
      rate = static_cast<int>(le32(body + 4));
      bits = le16(body + 14);
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      data = body;
      data_len = std::min<std::size_t>(len, avail);
    }
    pos += 8 + len + (len & 1);
  }
  if (channels <= 0 || rate <= 0) throw ParseError(where + ": missing fmt chunk");
  if (bits != 16) throw ParseError(where + ": only 16-bit PCM is supported");
  if (data == nullptr) throw ParseError(where + ": missing data chunk");
  const std::size_t frames = data_len / (2 * static_cast<std::size_t>(channels));
  Waveform wave;
  wave.sample_rate_hz = rate;
  wave.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const auto s = static_cast<std::int16_t>(le16(data + 2 * (f * channels + c)));
      acc += s / 32768.0;
    }
    wave.samples[f] = acc / channels;
  }
  return wave;
}

Waveform load_audio(const std::filesystem::path& path) {
  return resample_linear(read_wav(path), kInternalSampleRate);
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(wave.sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(wave.sample_rate_hz) * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, 2 * n);
  for (double s : wave.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(std::lround(clipped * 32768.0), -32768L, 32767L))));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("short write to " + path.string());
}

}  // namespace mulan::dsp
