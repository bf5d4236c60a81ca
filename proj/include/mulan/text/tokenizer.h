// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_TEXT_TOKENIZER_H_
#define MULAN_TEXT_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mulan/text/vocabulary.h"

namespace mulan::text {

inline constexpr std::size_t kMaxWordChars = 100;

// Fixed-length token ids: [CLS] first, real tokens, then [PAD]. The mask
// marks real tokens (including [CLS]) with 1 and is always a prefix of 1s.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::uint8_t> attention_mask;

  std::size_t size() const { return ids.size(); }
  std::size_t real_length() const;
  bool operator==(const TokenSequence&) const = default;
};

// Lowercases ASCII, splits on whitespace and isolates ASCII punctuation.
std::vector<std::string> basic_tokenize(std::string_view text);

// Greedy longest-match-first wordpiece split of one word; a word that cannot
// be fully covered (or is longer than kMaxWordChars) becomes a single [UNK].
std::vector<int> wordpiece(std::string_view word, const Vocabulary& vocab);

// Unpadded wordpiece ids of a whole string, without [CLS].
std::vector<int> wordpiece_ids(std::string_view text, const Vocabulary& vocab);

// [CLS] + wordpieces, truncated or [PAD]-padded to exactly n (n >= 2).
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab, std::size_t n);

// Inverse of wordpiece_ids for in-vocabulary text: "##" pieces glue onto the
// previous token, other tokens are space-separated.
std::string detokenize(std::span<const int> ids, const Vocabulary& vocab);

}  // namespace mulan::text

#endif  // MULAN_TEXT_TOKENIZER_H_
