// Copyright 2026 The evlink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EVLINK_KBSTORE_H_
#define EVLINK_KBSTORE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evlink/io.h"
#include "evlink/tokens.h"

namespace evlink {

// The reserved out-of-KB label. Never a valid entry id.
inline constexpr std::string_view kNilLabel = "NIL";

struct KBEntry {
  std::string id;
  std::string title;
  std::string description;
};

// Immutable collection of KB entries in load order. Safe for concurrent
// readers once constructed.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  // Validates ids (non-empty, unique, not NIL) and titles (non-empty).
  // Throws DataError naming the offending id.
  explicit KnowledgeBase(std::vector<KBEntry> entries);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<KBEntry> &entries() const { return entries_; }
  const KBEntry &operator[](size_t i) const { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Position of `id` in load order, or nullopt.
  std::optional<size_t> Position(std::string_view id) const;
  const KBEntry *Find(std::string_view id) const;

  // Copy without the listed ids; order of the remaining entries is kept.
  KnowledgeBase Without(const std::vector<std::string> &ids) const;

 private:
  std::vector<KBEntry> entries_;
  std::unordered_map<std::string, size_t> by_id_;
};

KnowledgeBase ParseKb(std::string_view text, std::string_view source_name);
KnowledgeBase LoadKb(const std::filesystem::path &path);
std::string DumpKb(const KnowledgeBase &kb,
                   const std::optional<Json> &manifest = std::nullopt);

// Returns the entry or nullptr; NIL is never stored so it is never found.
inline const KBEntry *GetEntry(const KnowledgeBase &kb, std::string_view id) {
  return kb.Find(id);
}

// tokenize(title) + [TITLE_SEP] + tokenize(description), truncated on the
// right to max_len tokens.
TokenSeq CandidateText(const KBEntry &entry, size_t max_len);

}  // namespace evlink

#endif  // EVLINK_KBSTORE_H_
