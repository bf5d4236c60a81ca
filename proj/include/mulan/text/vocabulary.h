// Copyright 2026 The MuLan Kit Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MULAN_TEXT_VOCABULARY_H_
#define MULAN_TEXT_VOCABULARY_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mulan::text {

// Dense token table. Ids 0..2 are always [PAD], [CLS], [UNK]; wordpiece
// continuation pieces carry a "##" prefix.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kUnk = 2;
  static constexpr std::string_view kContinuation = "##";

  // Reserved tokens only.
  Vocabulary();

  // Throws VocabError on duplicates or missing/misplaced reserved tokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  // One token per line; line number (0-based) is the id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Reserved tokens followed by every distinct basic-tokenized word of `texts`,
// sorted so the result does not depend on input order.
Vocabulary build_vocabulary(const std::vector<std::string>& texts);

}  // namespace mulan::text

#endif  // MULAN_TEXT_VOCABULARY_H_
