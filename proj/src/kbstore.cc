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

#include "evlink/kbstore.h"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "evlink/errors.h"

namespace evlink {

KnowledgeBase::KnowledgeBase(std::vector<KBEntry> entries)
    : entries_(std::move(entries)) {
  by_id_.reserve(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) {
    const KBEntry &e = entries_[i];
    if (e.id.empty()) {
      throw DataError("KB entry " + std::to_string(i) + " has an empty id");
    }
    if (e.id == kNilLabel) {
      throw DataError("KB entry " + std::to_string(i) +
                      " uses the reserved id \"NIL\"");
    }
    if (e.title.empty()) throw DataError("KB entry \"" + e.id + "\" has an empty title");
    if (!by_id_.emplace(e.id, i).second) {
      throw DataError("duplicate KB id \"" + e.id + "\"");
    }
  }
}

std::optional<size_t> KnowledgeBase::Position(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const KBEntry *KnowledgeBase::Find(std::string_view id) const {
  auto pos = Position(id);
  return pos ? &entries_[*pos] : nullptr;
}

KnowledgeBase KnowledgeBase::Without(const std::vector<std::string> &ids) const {
  std::unordered_set<std::string> drop(ids.begin(), ids.end());
  std::vector<KBEntry> kept;
  for (const auto &e : entries_) {
    if (!drop.count(e.id)) kept.push_back(e);
  }
  return KnowledgeBase(std::move(kept));
}

KnowledgeBase ParseKb(std::string_view text, std::string_view source_name) {
  io::JsonlDocument doc = io::ParseJsonl(text, source_name);
  std::vector<KBEntry> entries;
  entries.reserve(doc.records.size());
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < doc.records.size(); ++i) {
    const Json &r = doc.records[i];
    std::string where = std::string(source_name) + ":" + std::to_string(doc.lines[i]);
    for (const char *field : {"id", "title", "description"}) {
      if (!r.contains(field) || !r[field].is_string()) {
        throw DataError(where + ": missing string field \"" + field + "\"");
      }
    }
    KBEntry e{r["id"].get<std::string>(), r["title"].get<std::string>(),
              r["description"].get<std::string>()};
    if (e.id == kNilLabel) throw DataError(where + ": reserved id \"NIL\"");
    if (!seen.insert(e.id).second) {
      throw DataError(where + ": duplicate KB id \"" + e.id + "\"");
    }
    entries.push_back(std::move(e));
  }
  return KnowledgeBase(std::move(entries));
}

KnowledgeBase LoadKb(const std::filesystem::path &path) {
  return ParseKb(io::ReadFile(path), path.string());
}

std::string DumpKb(const KnowledgeBase &kb, const std::optional<Json> &manifest) {
  std::vector<Json> records;
  records.reserve(kb.size());
  for (const auto &e : kb) {
    records.push_back({{"id", e.id}, {"title", e.title}, {"description", e.description}});
  }
  return io::DumpJsonl(records, manifest);
}

TokenSeq CandidateText(const KBEntry &entry, size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("candidate max_len must be positive");
  TokenSeq out = Tokenize(entry.title);
  out.emplace_back(Markers::kTitleSep);
  TokenSeq desc = Tokenize(entry.description);
  out.insert(out.end(), desc.begin(), desc.end());
  if (out.size() > max_len) out.resize(max_len);
  return out;
}

}  // namespace evlink
