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

#ifndef EVLINK_EXTRACTION_H_
#define EVLINK_EXTRACTION_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evlink/errors.h"
#include "evlink/io.h"
#include "evlink/tokens.h"

namespace evlink {

// Inclusive token span.
struct Span {
  size_t start = 0;
  size_t end = 0;

  size_t length() const { return end - start + 1; }
  bool Within(size_t n) const { return start <= end && end < n; }
  bool Overlaps(const Span &o) const { return start <= o.end && o.start <= end; }
  friend bool operator==(const Span &, const Span &) = default;
};

enum class Pos { kVerb, kNoun, kOther };

std::string_view PosName(Pos pos);
// Unknown or missing values map to kOther.
Pos ParsePos(std::string_view name);

struct NamedEntityAnnotation {
  Span span;
  std::string entity_type;
  friend bool operator==(const NamedEntityAnnotation &,
                         const NamedEntityAnnotation &) = default;
};

struct EventQuery {
  std::string query_id;
  TokenSeq tokens;
  Span mention;
  Pos pos = Pos::kOther;
  std::string gold;  // KB id or "NIL"
  // Gold named entities, consumed by the entity-augmented format only.
  std::vector<NamedEntityAnnotation> entities;

  bool IsNil() const;
  friend bool operator==(const EventQuery &, const EventQuery &) = default;
};

struct Argument {
  Span span;
  std::string role;
  friend bool operator==(const Argument &, const Argument &) = default;
};

inline constexpr std::string_view kUnknownEventType = "UNKNOWN";

struct TaggedQuery {
  EventQuery base;
  std::string event_type{kUnknownEventType};
  std::vector<Argument> arguments;  // sorted by span start
  friend bool operator==(const TaggedQuery &, const TaggedQuery &) = default;
};

// Throw DataError describing the first violated invariant.
void ValidateQuery(const EventQuery &q);
void ValidateTagged(const TaggedQuery &q);

// Record (de)serialization for query and tagged-query files.
EventQuery QueryFromJson(const Json &r);
Json QueryToJson(const EventQuery &q);
TaggedQuery TaggedFromJson(const Json &r);
Json TaggedToJson(const TaggedQuery &q);

std::vector<EventQuery> LoadQueries(const std::filesystem::path &path);
// Accepts plain query records too; those come back untagged.
std::vector<TaggedQuery> LoadTagged(const std::filesystem::path &path);
std::string DumpTagged(std::span<const TaggedQuery> queries,
                       const std::optional<Json> &manifest = std::nullopt);

// Whatever an extraction backend returns, before invariants are enforced.
struct RawExtraction {
  std::string event_type;
  std::vector<Argument> arguments;
};

class ExtractorAdapter {
 public:
  virtual ~ExtractorAdapter() = default;
  virtual std::string name() const = 0;
  virtual RawExtraction Run(const EventQuery &query) const = 0;
  // Serial adapters are never called concurrently by ExtractAll.
  virtual bool thread_safe() const { return true; }
};

class ExtractionError : public DataError {
 public:
  ExtractionError(std::string query_id, const std::string &what)
      : DataError("extraction failed for query \"" + query_id + "\": " + what),
        query_id_(std::move(query_id)) {}
  const std::string &query_id() const { return query_id_; }

 private:
  std::string query_id_;
};

// Runs the adapter and enforces TaggedQuery invariants on its output:
// out-of-range, role-less and mention-overlapping arguments are dropped;
// among mutually overlapping arguments the longest wins (ties: earlier
// start). An empty event type becomes "UNKNOWN".
TaggedQuery Extract(const ExtractorAdapter &extractor, const EventQuery &query);

// The invariant-enforcing half of Extract, for tags from other sources.
TaggedQuery EnforceTagInvariants(const EventQuery &query, RawExtraction raw);

// Tags every query, in input order. Runs up to `threads` workers when the
// adapter is thread safe.
std::vector<TaggedQuery> ExtractAll(const ExtractorAdapter &extractor,
                                    std::span<const EventQuery> queries,
                                    int threads = 1);

// Surface-string lexicon for the rule extractor. Surfaces are matched on
// lowercased tokens.
struct LexiconEntry {
  enum class Kind { kRole, kTrigger };
  Kind kind = Kind::kRole;
  TokenSeq surface;
  std::string label;       // role name or event type
  std::string event_type;  // optional constraint on role entries
};

class RoleLexicon {
 public:
  void AddRole(std::string_view surface, std::string role,
               std::string event_type = {});
  void AddTrigger(std::string_view surface, std::string event_type);
  const std::vector<LexiconEntry> &entries() const { return entries_; }

  static RoleLexicon Load(const std::filesystem::path &path);
  static RoleLexicon Parse(std::string_view text, std::string_view source_name);
  std::string Dump() const;

 private:
  std::vector<LexiconEntry> entries_;
};

// Deterministic extractor that tags exact case-insensitive lexicon matches
// (longest match first, left to right) and types the event from trigger
// entries matching the mention text.
std::unique_ptr<ExtractorAdapter> MakeRuleExtractor(RoleLexicon lexicon);

// Adapter that tags nothing.
std::unique_ptr<ExtractorAdapter> MakeNullExtractor();

}  // namespace evlink

#endif  // EVLINK_EXTRACTION_H_
