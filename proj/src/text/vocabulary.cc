// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/text/vocabulary.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "mulan/error.h"
#include "mulan/text/tokenizer.h"

namespace mulan::text {

Vocabulary::Vocabulary()
    : tokens_{"[PAD]", "[CLS]", "[UNK]"},
      index_{{"[PAD]", kPad}, {"[CLS]", kCls}, {"[UNK]", kUnk}} {}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 3 || tokens[kPad] != "[PAD]" || tokens[kCls] != "[CLS]" ||
      tokens[kUnk] != "[UNK]") {
    throw VocabError("vocabulary must start with [PAD], [CLS], [UNK]");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.index_.clear();
  v.index_.reserve(v.tokens_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (v.tokens_[i].empty()) throw VocabError("empty token at line " + std::to_string(i + 1));
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw VocabError("duplicate token '" + v.tokens_[i] + "' at line " + std::to_string(i + 1));
    }
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  for (const auto& t : texts) {
    for (auto& w : basic_tokenize(t)) {
      if (w.size() <= kMaxWordChars) words.insert(std::move(w));
    }
  }
  std::vector<std::string> tokens{"[PAD]", "[CLS]", "[UNK]"};
  for (const auto& w : words) {
    if (w != "[PAD]" && w != "[CLS]" && w != "[UNK]") tokens.push_back(w);
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

}  // namespace mulan::text
