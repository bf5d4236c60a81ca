// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/nn/checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "mulan/error.h"

namespace mulan::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'U', 'L', 'A', 'N', 'C', 'K', 'P'};

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void tensor(const std::string& name, const Tensor& t) {
    str(name);
    pod(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) pod(static_cast<std::uint64_t>(d));
    raw(t.raw(), t.size() * sizeof(double));
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::pair<std::string, Tensor> tensor() {
    std::string name = str();
    const auto rank = pod<std::uint32_t>();
    if (rank > 8) throw LoadError("checkpoint: implausible tensor rank for " + name);
    Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& d : shape) {
      const auto dim = pod<std::uint64_t>();
      d = static_cast<std::size_t>(dim);
      count *= dim;
    }
    if (count > remaining() / sizeof(double)) throw LoadError("checkpoint: truncated tensor " + name);
    std::vector<double> data(count);
    std::memcpy(data.data(), bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
    return {std::move(name), Tensor(std::move(shape), std::move(data))};
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw LoadError("checkpoint: unexpected end of data");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(chunk));
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod(ckpt.version);
  w.str(ckpt.config_json);
  w.pod(ckpt.global_step);
  w.str(ckpt.rng_state);
  const auto names = ckpt.params.names();
  w.pod(static_cast<std::uint32_t>(names.size()));
  for (const auto& name : names) w.tensor(name, ckpt.params.value(name));
  w.pod(static_cast<std::uint32_t>(names.size() * 3));
  for (const auto& name : names) {
    const AdamSlot& slot = ckpt.params.adam(name);
    w.tensor(name + "/m", slot.first_moment);
    w.tensor(name + "/v", slot.second_moment);
    w.tensor(name + "/step", Tensor::scalar(static_cast<double>(slot.steps)));
  }
  w.pod(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 8) throw LoadError("checkpoint: file too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw LoadError("checkpoint: bad magic");
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  Reader r(bytes.subspan(sizeof(kMagic)));
  Checkpoint ckpt;
  ckpt.version = r.pod<std::uint32_t>();
  if (ckpt.version != kCheckpointVersion) {
    throw LoadError("checkpoint: version " + std::to_string(ckpt.version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  if (crc32_of(bytes.first(bytes.size() - 4)) != stored_crc) {
    throw LoadError("checkpoint: CRC mismatch (corrupt or truncated file)");
  }
  ckpt.config_json = r.str();
  ckpt.global_step = r.pod<std::uint64_t>();
  ckpt.rng_state = r.str();
  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = r.tensor();
    if (ckpt.params.contains(name)) throw LoadError("checkpoint: duplicate parameter " + name);
    ckpt.params.add(name, std::move(t));
  }
  const auto opt_count = r.pod<std::uint32_t>();
  std::map<std::string, Tensor> opt;
  for (std::uint32_t i = 0; i < opt_count; ++i) {
    auto [name, t] = r.tensor();
    opt.emplace(std::move(name), std::move(t));
  }
  for (const auto& name : ckpt.params.names()) {
    auto m = opt.find(name + "/m");
    auto v = opt.find(name + "/v");
    auto s = opt.find(name + "/step");
    if (m == opt.end() || v == opt.end() || s == opt.end()) {
      throw LoadError("checkpoint: missing optimizer state for " + name);
    }
    const Shape& shape = ckpt.params.value(name).shape();
    if (m->second.shape() != shape || v->second.shape() != shape) {
      throw LoadError("checkpoint: optimizer state shape mismatch for " + name);
    }
    AdamSlot& slot = ckpt.params.adam(name);
    slot.first_moment = std::move(m->second);
    slot.second_moment = std::move(v->second);
    slot.steps = static_cast<std::uint64_t>(s->second.item());
  }
  if (r.remaining() != 4) throw LoadError("checkpoint: trailing bytes before CRC");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {
std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}
}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  return parse_checkpoint(bytes);
}

std::string file_digest(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc32_of(bytes));
  return buf;
}

}  // namespace mulan::nn
