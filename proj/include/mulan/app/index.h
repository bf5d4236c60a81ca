// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_APP_INDEX_H_
#define MULAN_APP_INDEX_H_

#include <filesystem>
#include <string>
#include <vector>

namespace mulan::app {

// id -> unit-norm vector, tagged with the digest of the producing checkpoint.
struct EmbeddingIndex {
  std::size_t dim = 0;
  std::string digest;
  std::string modality;  // "audio" or "text"
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;

  // Throws IntegrityError on dimension mismatch, duplicate ids or a vector
  // whose norm is not 1 within `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

// Binary (default) or JSONL when the path ends in ".jsonl".
//   binary: "MULANEMB" u32 version, u32 dim, u32 len + digest, u32 len + modality,
//           u64 count, then per record u32 id_len, id bytes, dim x f32 (little-endian)
//   JSONL:  header {"dim", "digest", "modality"} then {"id", "vector"} per line
// Binary vectors are stored as f32 and re-normalised in f64 on load.
void write_index(const std::filesystem::path& path, const EmbeddingIndex& index);
EmbeddingIndex read_index(const std::filesystem::path& path);

}  // namespace mulan::app

#endif  // MULAN_APP_INDEX_H_
