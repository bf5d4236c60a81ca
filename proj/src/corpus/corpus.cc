// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/corpus/corpus.h"

#include <fstream>
#include "json.hpp"
#include <sstream>
#include <unordered_set>

#include "mulan/error.h"

namespace mulan::corpus {
namespace {

using nlohmann::json;

Recording parse_recording(const json& j) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw ParseError("missing string field \"id\"");
  Recording r;
  r.id = j["id"].get<std::string>();
  if (r.id.empty()) throw ParseError("empty \"id\"");
  if (j.contains("audio") && !j["audio"].is_null()) {
    if (!j["audio"].is_string()) throw ParseError("\"audio\" must be a string or null");
    r.audio = j["audio"].get<std::string>();
  }
  if (j.contains("synthetic_seed") && !j["synthetic_seed"].is_null()) {
    if (!j["synthetic_seed"].is_number_unsigned()) {
      throw ParseError("\"synthetic_seed\" must be a non-negative integer or null");
    }
    r.synthetic_seed = j["synthetic_seed"].get<std::uint64_t>();
  }
  if (!j.contains("annotations") || !j["annotations"].is_array()) {
    throw ParseError("missing array field \"annotations\"");
  }
  for (const auto& a : j["annotations"]) {
    if (!a.is_object() || !a.contains("source") || !a["source"].is_string() ||
        !a.contains("text") || !a["text"].is_string()) {
      throw ParseError("annotation needs string \"source\" and \"text\"");
    }
    r.annotations.push_back({parse_source(a["source"].get<std::string>()), a["text"].get<std::string>()});
  }
  if (j.contains("concepts")) {
    if (!j["concepts"].is_array()) throw ParseError("\"concepts\" must be an array");
    for (const auto& c : j["concepts"]) {
      if (!c.is_number_integer()) throw ParseError("\"concepts\" must hold integers");
      r.concepts.push_back(c.get<int>());
    }
  }
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) throw ParseError("\"labels\" must be an array");
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) throw ParseError("\"labels\" must hold strings");
      r.labels.push_back(l.get<std::string>());
    }
  }
  if (r.synthetic_seed && r.concepts.empty()) {
    throw ParseError("synthetic recording without concepts");
  }
  return r;
}

json to_json(const Recording& r) {
  json j;
  j["id"] = r.id;
  j["audio"] = r.audio ? json(*r.audio) : json(nullptr);
  j["synthetic_seed"] = r.synthetic_seed ? json(*r.synthetic_seed) : json(nullptr);
  j["annotations"] = json::array();
  for (const auto& a : r.annotations) {
    j["annotations"].push_back({{"source", source_name(a.source)}, {"text", a.text}});
  }
  if (!r.concepts.empty()) j["concepts"] = r.concepts;
  if (!r.labels.empty()) j["labels"] = r.labels;
  return j;
}

}  // namespace

std::string source_name(SourceType source) {
  switch (source) {
    case SourceType::kSF: return "SF";
    case SourceType::kLF: return "LF";
    case SourceType::kPL: return "PL";
    case SourceType::kASET: return "ASET";
  }
  return "?";
}

SourceType parse_source(const std::string& name) {
  for (SourceType s : kAllSources) {
    if (source_name(s) == name) return s;
  }
  throw ParseError("unknown source type '" + name + "' (expected SF, LF, PL or ASET)");
}

bool Recording::has_source(SourceType source) const {
  for (const auto& a : annotations) {
    if (a.source == source) return true;
  }
  return false;
}

std::vector<std::size_t> Recording::annotation_indices(SourceType source) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (annotations[i].source == source) out.push_back(i);
  }
  return out;
}

void Corpus::add(Recording recording) {
  if (index_.count(recording.id)) {
    throw IntegrityError("duplicate recording id '" + recording.id + "'");
  }
  index_.emplace(recording.id, recordings_.size());
  recordings_.push_back(std::move(recording));
}

const Recording* Corpus::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &recordings_[it->second];
}

std::filesystem::path Corpus::resolve_audio(const Recording& recording) const {
  if (!recording.audio) throw LoadError("recording '" + recording.id + "' has no audio path");
  std::filesystem::path p(*recording.audio);
  return p.is_absolute() ? p : base_dir_ / p;
}

std::vector<std::string> Corpus::all_texts() const {
  std::vector<std::string> out;
  for (const auto& r : recordings_) {
    for (const auto& a : r.annotations) out.push_back(a.text);
  }
  return out;
}

Corpus parse_corpus(const std::string& jsonl, std::filesystem::path base_dir) {
  Corpus corpus(std::move(base_dir));
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Recording r;
    try {
      r = parse_recording(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      corpus.add(std::move(r));
    } catch (const IntegrityError& e) {
      throw IntegrityError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), path.parent_path());
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus.recordings()) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  out << corpus_to_jsonl(corpus);
  if (!out) throw IoError("failed writing corpus " + path.string());
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, std::size_t count) {
  if (count > corpus.size()) throw ArgumentError("split point beyond corpus size");
  Corpus head(corpus.base_dir());
  Corpus tail(corpus.base_dir());
  for (std::size_t i = 0; i < corpus.size(); ++i) (i < count ? head : tail).add(corpus[i]);
  return {std::move(head), std::move(tail)};
}

std::vector<Recording> build_aset_pairs(const std::vector<LabeledClip>& clips) {
  std::vector<Recording> out;
  for (const auto& clip : clips) {
    Recording r;
    r.id = clip.id;
    r.audio = clip.audio;
    std::unordered_set<std::string> seen;
    for (const auto& label : clip.labels) {
      if (!seen.insert(label).second) continue;
      r.annotations.push_back({SourceType::kASET, label});
      r.labels.push_back(label);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mulan::corpus
