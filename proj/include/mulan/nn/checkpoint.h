// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_NN_CHECKPOINT_H_
#define MULAN_NN_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mulan/nn/parameter_store.h"

namespace mulan::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to resume training or run inference.
//
// File layout (little-endian):
//   "MULANCKP" u32 version
//   u32 len, config JSON        u64 global_step        u32 len, rng state
//   parameter table: u32 count, then per entry
//     u32 name_len, name, u32 rank, u64 dims[rank], f64 data[prod(dims)]
//   optimizer table, same encoding: "<param>/m", "<param>/v", "<param>/step"
//   u32 CRC-32 of every preceding byte
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_json;
  std::uint64_t global_step = 0;
  std::string rng_state;
  ParameterStore params;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
// Throws LoadError on bad magic, version mismatch, truncation or CRC failure.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

// Writes through a temporary file and renames, so readers never observe a
// half-written checkpoint.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);
// Hex CRC-32 of a file's bytes; used as the checkpoint digest in reports.
std::string file_digest(const std::filesystem::path& path);

}  // namespace mulan::nn

#endif  // MULAN_NN_CHECKPOINT_H_
