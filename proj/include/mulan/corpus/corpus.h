// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_CORPUS_CORPUS_H_
#define MULAN_CORPUS_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mulan::corpus {

enum class SourceType { kSF = 0, kLF = 1, kPL = 2, kASET = 3 };

inline constexpr std::array<SourceType, 4> kAllSources = {SourceType::kSF, SourceType::kLF,
                                                         SourceType::kPL, SourceType::kASET};

std::string source_name(SourceType source);
// Throws ParseError for anything but SF, LF, PL or ASET.
SourceType parse_source(const std::string& name);

struct Annotation {
  SourceType source;
  std::string text;
  bool operator==(const Annotation&) const = default;
};

struct Recording {
  std::string id;
  std::optional<std::string> audio;  // path relative to the corpus file
  std::optional<std::uint64_t> synthetic_seed;
  std::vector<Annotation> annotations;
  std::vector<int> concepts;         // planted ground truth, synthetic only
  std::vector<std::string> labels;   // tag strings for tagging evaluation

  bool has_source(SourceType source) const;
  std::vector<std::size_t> annotation_indices(SourceType source) const;
  bool operator==(const Recording&) const = default;
};

// Ordered collection of recordings with unique ids. Immutable once built,
// so concurrent readers need no locking.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

  // Throws IntegrityError on a duplicate id.
  void add(Recording recording);
  const std::vector<Recording>& recordings() const { return recordings_; }
  const Recording& operator[](std::size_t i) const { return recordings_.at(i); }
  std::size_t size() const { return recordings_.size(); }
  bool empty() const { return recordings_.empty(); }
  const Recording* find(const std::string& id) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }
  std::filesystem::path resolve_audio(const Recording& recording) const;

  // Every annotation text, in corpus order.
  std::vector<std::string> all_texts() const;

  bool operator==(const Corpus& other) const { return recordings_ == other.recordings_; }

 private:
  std::filesystem::path base_dir_;
  std::vector<Recording> recordings_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One JSON object per line:
//   {"id", "audio", "synthetic_seed", "annotations": [{"source", "text"}],
//    "concepts", "labels"}
// Blank lines are skipped. Throws ParseError naming the 1-based line number,
// IntegrityError on duplicate ids, IoError if the file cannot be read.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(const std::string& jsonl, std::filesystem::path base_dir = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_jsonl(const Corpus& corpus);

// First `count` recordings and the rest.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, std::size_t count);

struct LabeledClip {
  std::string id;
  std::optional<std::string> audio;
  std::vector<std::string> labels;
};

// One ASET annotation per distinct label string, in first-seen order; clips
// without labels are kept with no annotations.
std::vector<Recording> build_aset_pairs(const std::vector<LabeledClip>& clips);

}  // namespace mulan::corpus

#endif  // MULAN_CORPUS_CORPUS_H_
