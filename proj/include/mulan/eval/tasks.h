// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_EVAL_TASKS_H_
#define MULAN_EVAL_TASKS_H_

#include <filesystem>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "mulan/eval/metrics.h"

namespace mulan::eval {

enum class TaskKind { kZeroShot, kLinearProbe, kRetrieval, kTriplet };

std::string task_kind_name(TaskKind kind);
// Throws ArgumentError on an unknown name.
TaskKind parse_task_kind(const std::string& name);

// Clips by corpus id with binary labels per tag. `train` marks the probe's
// training split and is ignored for zero-shot scoring.
struct TaggingTask {
  std::vector<std::string> tags;
  std::vector<std::string> clips;
  LabelMatrix labels;
  std::vector<bool> train;

  void validate(bool need_split) const;
};

struct RetrievalTask {
  std::vector<std::string> pool;
  std::vector<std::string> queries;
  std::vector<std::set<std::string>> targets;

  void validate() const;
};

struct Triplet {
  std::string anchor, pos, neg;
};

struct TripletTask {
  std::vector<Triplet> triplets;

  void validate() const;
};

struct Task {
  TaskKind kind;
  std::variant<TaggingTask, RetrievalTask, TripletTask> body;
};

// JSONL: a header object {"kind": ...} followed by one record per line.
//   zero_shot / linear_probe: header {"tags": [...]};
//     records {"clip": id, "labels": [tag...], "split": "train"|"eval"}
//   retrieval: header {"pool": [id...]}; records {"query": str, "targets": [id...]}
//   triplet: records {"anchor": str, "pos": str, "neg": str}
// A kind override reinterprets a tagging file as the other tagging protocol.
// Throws ParseError with the 1-based line number.
Task load_task(const std::filesystem::path& path);
Task parse_task(const std::string& jsonl);
std::string task_to_jsonl(const Task& task);
void save_task(const Task& task, const std::filesystem::path& path);

}  // namespace mulan::eval

#endif  // MULAN_EVAL_TASKS_H_
