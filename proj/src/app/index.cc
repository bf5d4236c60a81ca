// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/app/index.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mulan/error.h"

namespace mulan::app {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'M', 'U', 'L', 'A', 'N', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "index IO assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Cursor {
 public:
  explicit Cursor(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw LoadError("embedding index is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

bool is_jsonl(const std::filesystem::path& path) { return path.extension() == ".jsonl"; }

void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (n == 0.0) throw IntegrityError("embedding index holds a zero vector");
  for (double& x : v) x /= n;
}

}  // namespace

void EmbeddingIndex::validate(double tolerance) const {
  if (dim == 0) throw IntegrityError("embedding index has dimension 0");
  if (ids.size() != vectors.size()) throw IntegrityError("embedding index ids and vectors differ in count");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) throw IntegrityError("duplicate id '" + ids[i] + "' in embedding index");
    if (vectors[i].size() != dim) {
      throw IntegrityError("vector '" + ids[i] + "' has dimension " + std::to_string(vectors[i].size()) +
                           ", expected " + std::to_string(dim));
    }
    double s = 0.0;
    for (double x : vectors[i]) s += x * x;
    if (std::abs(std::sqrt(s) - 1.0) > tolerance) {
      throw IntegrityError("vector '" + ids[i] + "' is not unit norm");
    }
  }
}

void write_index(const std::filesystem::path& path, const EmbeddingIndex& index) {
  index.validate();
  std::string out;
  if (is_jsonl(path)) {
    out += json{{"dim", index.dim}, {"digest", index.digest}, {"modality", index.modality}}.dump() + "\n";
    for (std::size_t i = 0; i < index.ids.size(); ++i) {
      out += json{{"id", index.ids[i]}, {"vector", index.vectors[i]}}.dump() + "\n";
    }
  } else {
    out.append(kMagic, sizeof(kMagic));
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(index.dim));
    put_string(out, index.digest);
    put_string(out, index.modality);
    put(out, static_cast<std::uint64_t>(index.ids.size()));
    for (std::size_t i = 0; i < index.ids.size(); ++i) {
      put_string(out, index.ids[i]);
      for (double x : index.vectors[i]) put(out, static_cast<float>(x));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write embedding index " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing embedding index " + path.string());
}

EmbeddingIndex read_index(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open embedding index " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  const std::string bytes = buf.str();
  EmbeddingIndex index;
  if (bytes.size() >= sizeof(kMagic) && std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0) {
    Cursor c(bytes);
    for (std::size_t i = 0; i < sizeof(kMagic); ++i) c.get<char>();
    if (c.get<std::uint32_t>() != kVersion) throw LoadError("unsupported embedding index version");
    index.dim = c.get<std::uint32_t>();
    index.digest = c.get_string();
    index.modality = c.get_string();
    const auto count = c.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
      index.ids.push_back(c.get_string());
      std::vector<double> v(index.dim);
      for (double& x : v) x = c.get<float>();
      normalize(v);
      index.vectors.push_back(std::move(v));
    }
    if (!c.done()) throw LoadError("trailing bytes in embedding index");
  } else {
    std::istringstream in(bytes);
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json j = json::parse(line);
        if (!header) {
          index.dim = j.at("dim").get<std::size_t>();
          index.digest = j.at("digest").get<std::string>();
          index.modality = j.value("modality", "");
          header = true;
        } else {
          index.ids.push_back(j.at("id").get<std::string>());
          index.vectors.push_back(j.at("vector").get<std::vector<double>>());
        }
      } catch (const json::exception& e) {
        throw ParseError("embedding index line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (!header) throw ParseError("embedding index " + path.string() + " is empty");
  }
  index.validate();
  return index;
}

}  // namespace mulan::app
