// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mulan/text/tokenizer.h"

#include <algorithm>
#include <cctype>

#include "mulan/error.h"

namespace mulan::text {

std::size_t TokenSequence::real_length() const {
  return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), 1));
}

std::vector<std::string> basic_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  flush();
  return out;
}

std::vector<int> wordpiece(std::string_view word, const Vocabulary& vocab) {
  if (word.empty()) return {};
  if (word.size() > kMaxWordChars) return {Vocabulary::kUnk};
  std::vector<int> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < word.size()) {
    std::size_t end = word.size();
    int found = -1;
    while (start < end) {
      candidate.assign(start > 0 ? Vocabulary::kContinuation : "");
      candidate.append(word.substr(start, end - start));
      if (auto id = vocab.find(candidate)) {
        found = *id;
        break;
      }
      --end;
    }
    if (found < 0) return {Vocabulary::kUnk};
    pieces.push_back(found);
    start = end;
  }
  return pieces;
}

std::vector<int> wordpiece_ids(std::string_view text, const Vocabulary& vocab) {
  std::vector<int> ids;
  for (const auto& w : basic_tokenize(text)) {
    const auto pieces = wordpiece(w, vocab);
    ids.insert(ids.end(), pieces.begin(), pieces.end());
  }
  return ids;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t n) {
  if (n < 2) throw ArgumentError("tokenize: sequence length must be >= 2");
  const std::vector<int> pieces = wordpiece_ids(text, vocab);
  const std::size_t real = std::min(pieces.size(), n - 1);
  TokenSequence seq;
  seq.ids.assign(n, Vocabulary::kPad);
  seq.attention_mask.assign(n, 0);
  seq.ids[0] = Vocabulary::kCls;
  seq.attention_mask[0] = 1;
  for (std::size_t i = 0; i < real; ++i) {
    seq.ids[i + 1] = pieces[i];
    seq.attention_mask[i + 1] = 1;
  }
  return seq;
}

std::string detokenize(std::span<const int> ids, const Vocabulary& vocab) {
  std::string out;
  for (int id : ids) {
    const std::string& tok = vocab.token(id);
    if (tok.starts_with(Vocabulary::kContinuation)) {
      out += tok.substr(Vocabulary::kContinuation.size());
    } else {
      if (!out.empty()) out += ' ';
      out += tok;
    }
  }
  return out;
}

}  // namespace mulan::text
