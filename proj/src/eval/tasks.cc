// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/eval/tasks.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mulan/error.h"

namespace mulan::eval {
namespace {

using nlohmann::json;

std::vector<std::string> string_array(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw ParseError(std::string("missing array field \"") + field + "\"");
  }
  std::vector<std::string> out;
  for (const auto& v : j[field]) {
    if (!v.is_string()) throw ParseError(std::string("\"") + field + "\" must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string string_field(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw ParseError(std::string("missing string field \"") + field + "\"");
  }
  return j[field].get<std::string>();
}

void parse_record(Task& task, const json& j) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  switch (task.kind) {
    case TaskKind::kZeroShot:
    case TaskKind::kLinearProbe: {
      auto& t = std::get<TaggingTask>(task.body);
      t.clips.push_back(string_field(j, "clip"));
      std::vector<int> row(t.tags.size(), 0);
      for (const auto& label : string_array(j, "labels")) {
        auto it = std::find(t.tags.begin(), t.tags.end(), label);
        if (it == t.tags.end()) throw ParseError("label '" + label + "' is not a declared tag");
        row[static_cast<std::size_t>(it - t.tags.begin())] = 1;
      }
      t.labels.push_back(std::move(row));
      const std::string split = j.contains("split") ? string_field(j, "split") : "eval";
      if (split != "train" && split != "eval") throw ParseError("\"split\" must be train or eval");
      t.train.push_back(split == "train");
      break;
    }
    case TaskKind::kRetrieval: {
      auto& t = std::get<RetrievalTask>(task.body);
      t.queries.push_back(string_field(j, "query"));
      const auto targets = string_array(j, "targets");
      t.targets.emplace_back(targets.begin(), targets.end());
      break;
    }
    case TaskKind::kTriplet: {
      auto& t = std::get<TripletTask>(task.body);
      t.triplets.push_back({string_field(j, "anchor"), string_field(j, "pos"), string_field(j, "neg")});
      break;
    }
  }
}

Task from_header(const json& j) {
  if (!j.is_object()) throw ParseError("expected a header object");
  Task task{parse_task_kind(string_field(j, "kind")), TripletTask{}};
  switch (task.kind) {
    case TaskKind::kZeroShot:
    case TaskKind::kLinearProbe: {
      TaggingTask t;
      t.tags = string_array(j, "tags");
      task.body = std::move(t);
      break;
    }
    case TaskKind::kRetrieval: {
      RetrievalTask t;
      t.pool = string_array(j, "pool");
      task.body = std::move(t);
      break;
    }
    case TaskKind::kTriplet:
      break;
  }
  return task;
}

}  // namespace

std::string task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kZeroShot: return "zero_shot";
    case TaskKind::kLinearProbe: return "linear_probe";
    case TaskKind::kRetrieval: return "retrieval";
    case TaskKind::kTriplet: return "triplet";
  }
  return "?";
}

TaskKind parse_task_kind(const std::string& name) {
  for (TaskKind k : {TaskKind::kZeroShot, TaskKind::kLinearProbe, TaskKind::kRetrieval, TaskKind::kTriplet}) {
    if (task_kind_name(k) == name) return k;
  }
  throw ArgumentError("unknown task kind '" + name +
                      "' (expected zero_shot, linear_probe, retrieval or triplet)");
}

void TaggingTask::validate(bool need_split) const {
  if (tags.empty()) throw ArgumentError("tagging task declares no tags");
  if (clips.empty()) throw ArgumentError("tagging task has no clips");
  if (labels.size() != clips.size() || train.size() != clips.size()) {
    throw ArgumentError("tagging task label matrix does not match its clips");
  }
  if (need_split) {
    const auto n_train = std::count(train.begin(), train.end(), true);
    if (n_train == 0 || n_train == static_cast<long>(train.size())) {
      throw ArgumentError("linear probe task needs both train and eval clips");
    }
  }
}

void RetrievalTask::validate() const {
  if (pool.empty()) throw ArgumentError("retrieval task has an empty pool");
  if (queries.empty()) throw ArgumentError("retrieval task has no queries");
  const std::set<std::string> members(pool.begin(), pool.end());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (targets[q].empty()) throw ArgumentError("query '" + queries[q] + "' has no targets");
    for (const auto& t : targets[q]) {
      if (!members.count(t)) throw ArgumentError("target '" + t + "' is not in the pool");
    }
  }
}

void TripletTask::validate() const {
  if (triplets.empty()) throw ArgumentError("triplet task is empty");
  for (const auto& t : triplets) {
    if (t.pos == t.neg) throw ArgumentError("triplet with pos == neg: '" + t.pos + "'");
  }
}

Task parse_task(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  std::optional<Task> task;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!task) {
        task = from_header(j);
      } else {
        parse_record(*task, j);
      }
    } catch (const json::exception& e) {
      throw ParseError("task line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError("task line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!task) throw ParseError("task file is empty");
  return *task;
}

Task load_task(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open task file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_task(buf.str());
}

std::string task_to_jsonl(const Task& task) {
  std::string out;
  json header{{"kind", task_kind_name(task.kind)}};
  auto emit = [&out](const json& j) {
    out += j.dump();
    out += '\n';
  };
  switch (task.kind) {
    case TaskKind::kZeroShot:
    case TaskKind::kLinearProbe: {
      const auto& t = std::get<TaggingTask>(task.body);
      header["tags"] = t.tags;
      emit(header);
      for (std::size_t i = 0; i < t.clips.size(); ++i) {
        std::vector<std::string> labels;
        for (std::size_t c = 0; c < t.tags.size(); ++c) {
          if (t.labels[i][c]) labels.push_back(t.tags[c]);
        }
        emit({{"clip", t.clips[i]}, {"labels", labels}, {"split", t.train[i] ? "train" : "eval"}});
      }
      break;
    }
    case TaskKind::kRetrieval: {
      const auto& t = std::get<RetrievalTask>(task.body);
      header["pool"] = t.pool;
      emit(header);
      for (std::size_t q = 0; q < t.queries.size(); ++q) {
        emit({{"query", t.queries[q]},
              {"targets", std::vector<std::string>(t.targets[q].begin(), t.targets[q].end())}});
      }
      break;
    }
    case TaskKind::kTriplet: {
      emit(header);
      for (const auto& t : std::get<TripletTask>(task.body).triplets) {
        emit({{"anchor", t.anchor}, {"pos", t.pos}, {"neg", t.neg}});
      }
      break;
    }
  }
  return out;
}

void save_task(const Task& task, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write task file " + path.string());
  out << task_to_jsonl(task);
}

}  // namespace mulan::eval
