// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_APP_COMMANDS_H_
#define MULAN_APP_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "mulan/app/config.h"

namespace mulan::app {

// Shared flags. Commands validate everything they can before touching the
// filesystem.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> task;
  std::optional<std::filesystem::path> index;
  std::optional<std::string> query;
  std::optional<std::string> kind;      // eval task kind override
  std::string modality = "audio";       // embed: audio | text
  std::size_t k = 10;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

// Config file (or the desk profile) with --seed and MULAN_NUM_WORKERS applied.
RunConfig resolve_config(const CommandOptions& opts);

// Synthetic corpus, WAVs, split files, labelled filter sentences and the four
// synthetic task files under --out; prints the manifest digest.
int cmd_synth(const CommandOptions& opts, std::ostream& out);
// Trains on --corpus, or on the synthetic training split when absent.
int cmd_train(const CommandOptions& opts, std::ostream& out);
// Clip embeddings of every recording, or text embeddings of every distinct
// annotation, written to --out.
int cmd_embed(const CommandOptions& opts, std::ostream& out);
// Top --k ids for --query against --index, scores to 6 decimals.
int cmd_retrieve(const CommandOptions& opts, std::ostream& out);
// JSON report for --task; written to --out or printed.
int cmd_eval(const CommandOptions& opts, std::ostream& out);

}  // namespace mulan::app

#endif  // MULAN_APP_COMMANDS_H_
