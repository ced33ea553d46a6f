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

#include "evlink/extraction.h"

#include <algorithm>
#include <stdexcept>

#include "evlink/kbstore.h"
#include "evlink/parallel.h"

namespace evlink {

std::string_view PosName(Pos pos) {
  switch (pos) {
    case Pos::kVerb: return "verb";
    case Pos::kNoun: return "noun";
    case Pos::kOther: break;
  }
  return "other";
}

Pos ParsePos(std::string_view name) {
  std::string lower = AsciiLower(name);
  if (lower == "verb") return Pos::kVerb;
  if (lower == "noun") return Pos::kNoun;
  return Pos::kOther;
}

bool EventQuery::IsNil() const { return gold == kNilLabel; }

void ValidateQuery(const EventQuery &q) {
  if (q.query_id.empty()) throw DataError("query with empty query_id");
  const std::string where = "query \"" + q.query_id + "\": ";
  if (q.tokens.empty()) throw DataError(where + "no tokens");
  if (!q.mention.Within(q.tokens.size())) throw DataError(where + "mention span out of bounds");
  if (q.gold.empty()) throw DataError(where + "empty gold label");
  for (const auto &ne : q.entities) {
    if (!ne.span.Within(q.tokens.size())) throw DataError(where + "entity span out of bounds");
    if (ne.entity_type.empty()) throw DataError(where + "entity without a type");
  }
}

void ValidateTagged(const TaggedQuery &q) {
  ValidateQuery(q.base);
  const std::string where = "query \"" + q.base.query_id + "\": ";
  for (size_t i = 0; i < q.arguments.size(); ++i) {
    const Argument &a = q.arguments[i];
    if (!a.span.Within(q.base.tokens.size())) throw DataError(where + "argument span out of bounds");
    if (a.role.empty()) throw DataError(where + "argument without a role");
    try {
      Markers::LabelStart(a.role);
    } catch (const std::invalid_argument &e) {
      throw DataError(where + e.what());
    }
    if (a.span.Overlaps(q.base.mention)) throw DataError(where + "argument overlaps the mention");
    if (i > 0) {
      const Argument &prev = q.arguments[i - 1];
      if (prev.span.start >= a.span.start) throw DataError(where + "arguments not sorted by start");
      if (prev.span.Overlaps(a.span)) throw DataError(where + "overlapping arguments");
    }
  }
}

namespace {

size_t GetIndex(const Json &r, const char *field) {
  if (!r.contains(field) || !r[field].is_number_integer() || r[field].get<long long>() < 0) {
    throw DataError(std::string("missing or invalid field \"") + field + "\"");
  }
  return r[field].get<size_t>();
}

std::string GetString(const Json &r, const char *field) {
  if (!r.contains(field) || !r[field].is_string()) {
    throw DataError(std::string("missing string field \"") + field + "\"");
  }
  return r[field].get<std::string>();
}

}  // namespace

EventQuery QueryFromJson(const Json &r) {
  EventQuery q;
  q.query_id = GetString(r, "query_id");
  if (!r.contains("tokens") || !r["tokens"].is_array()) {
    throw DataError("query \"" + q.query_id + "\": missing token list");
  }
  for (const auto &t : r["tokens"]) {
    if (!t.is_string()) throw DataError("query \"" + q.query_id + "\": non-string token");
    q.tokens.push_back(EscapeCorpusToken(t.get<std::string>()));
  }
  q.mention = {GetIndex(r, "mention_start"), GetIndex(r, "mention_end")};
  q.pos = r.contains("pos") && r["pos"].is_string() ? ParsePos(r["pos"].get<std::string>())
                                                     : Pos::kOther;
  q.gold = GetString(r, "gold");
  if (r.contains("entities")) {
    for (const auto &e : r["entities"]) {
      q.entities.push_back({{GetIndex(e, "start"), GetIndex(e, "end")}, GetString(e, "type")});
    }
  }
  ValidateQuery(q);
  return q;
}

Json QueryToJson(const EventQuery &q) {
  Json r{{"query_id", q.query_id},
         {"tokens", q.tokens},
         {"mention_start", q.mention.start},
         {"mention_end", q.mention.end},
         {"pos", PosName(q.pos)},
         {"gold", q.gold}};
  if (!q.entities.empty()) {
    Json ents = Json::array();
    for (const auto &e : q.entities) {
      ents.push_back({{"start", e.span.start}, {"end", e.span.end}, {"type", e.entity_type}});
    }
    r["entities"] = std::move(ents);
  }
  return r;
}

TaggedQuery TaggedFromJson(const Json &r) {
  TaggedQuery t;
  t.base = QueryFromJson(r);
  if (r.contains("event_type") && r["event_type"].is_string()) {
    t.event_type = r["event_type"].get<std::string>();
  }
  if (r.contains("arguments")) {
    for (const auto &a : r["arguments"]) {
      t.arguments.push_back({{GetIndex(a, "start"), GetIndex(a, "end")}, GetString(a, "role")});
    }
  }
  ValidateTagged(t);
  return t;
}

Json TaggedToJson(const TaggedQuery &q) {
  Json r = QueryToJson(q.base);
  r["event_type"] = q.event_type;
  Json args = Json::array();
  for (const auto &a : q.arguments) {
    args.push_back({{"start", a.span.start}, {"end", a.span.end}, {"role", a.role}});
  }
  r["arguments"] = std::move(args);
  return r;
}

namespace {

template <typename T, typename Fn>
std::vector<T> ParseRecords(const std::filesystem::path &path, Fn parse) {
  io::JsonlDocument doc = io::ReadJsonl(path);
  std::vector<T> out;
  out.reserve(doc.records.size());
  for (size_t i = 0; i < doc.records.size(); ++i) {
    try {
      out.push_back(parse(doc.records[i]));
    } catch (const DataError &e) {
      throw DataError(path.string() + ":" + std::to_string(doc.lines[i]) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<EventQuery> LoadQueries(const std::filesystem::path &path) {
  return ParseRecords<EventQuery>(path, QueryFromJson);
}

std::vector<TaggedQuery> LoadTagged(const std::filesystem::path &path) {
  return ParseRecords<TaggedQuery>(path, TaggedFromJson);
}

std::string DumpTagged(std::span<const TaggedQuery> queries,
                       const std::optional<Json> &manifest) {
  std::vector<Json> records;
  records.reserve(queries.size());
  for (const auto &q : queries) records.push_back(TaggedToJson(q));
  return io::DumpJsonl(records, manifest);
}

TaggedQuery Extract(const ExtractorAdapter &extractor, const EventQuery &query) {
  RawExtraction raw;
  try {
    raw = extractor.Run(query);
  } catch (const std::exception &e) {
    throw ExtractionError(query.query_id, e.what());
  }
  return EnforceTagInvariants(query, std::move(raw));
}

TaggedQuery EnforceTagInvariants(const EventQuery &query, RawExtraction raw) {
  std::vector<Argument> candidates;
  for (auto &a : raw.arguments) {
    if (!a.span.Within(query.tokens.size()) || a.role.empty()) continue;
    if (a.span.Overlaps(query.mention)) continue;
    try {
      Markers::LabelStart(a.role);
    } catch (const std::invalid_argument &) {
      continue;
    }
    candidates.push_back(std::move(a));
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Argument &a, const Argument &b) {
                     if (a.span.length() != b.span.length()) {
                       return a.span.length() > b.span.length();
                     }
                     return a.span.start < b.span.start;
                   });
  std::vector<Argument> kept;
  for (auto &a : candidates) {
    bool clash = std::any_of(kept.begin(), kept.end(),
                             [&](const Argument &k) { return k.span.Overlaps(a.span); });
    if (!clash) kept.push_back(std::move(a));
  }
  std::sort(kept.begin(), kept.end(), [](const Argument &a, const Argument &b) {
    return a.span.start < b.span.start;
  });

  TaggedQuery out;
  out.base = query;
  out.event_type = raw.event_type.empty() ? std::string(kUnknownEventType) : raw.event_type;
  out.arguments = std::move(kept);
  return out;
}

std::vector<TaggedQuery> ExtractAll(const ExtractorAdapter &extractor,
                                    std::span<const EventQuery> queries, int threads) {
  std::vector<TaggedQuery> out(queries.size());
  size_t workers = extractor.thread_safe() && threads > 1 ? static_cast<size_t>(threads) : 1;
  ParallelFor(queries.size(), workers, [&](size_t i) { out[i] = Extract(extractor, queries[i]); });
  return out;
}

void RoleLexicon::AddRole(std::string_view surface, std::string role,
                          std::string event_type) {
  TokenSeq toks = Tokenize(AsciiLower(surface));
  if (toks.empty() || role.empty()) throw DataError("empty lexicon role entry");
  entries_.push_back({LexiconEntry::Kind::kRole, std::move(toks), std::move(role),
                      std::move(event_type)});
}

void RoleLexicon::AddTrigger(std::string_view surface, std::string event_type) {
  TokenSeq toks = Tokenize(AsciiLower(surface));
  if (toks.empty() || event_type.empty()) throw DataError("empty lexicon trigger entry");
  entries_.push_back({LexiconEntry::Kind::kTrigger, std::move(toks), std::move(event_type), {}});
}

RoleLexicon RoleLexicon::Parse(std::string_view text, std::string_view source_name) {
  io::JsonlDocument doc = io::ParseJsonl(text, source_name);
  RoleLexicon lex;
  for (size_t i = 0; i < doc.records.size(); ++i) {
    const Json &r = doc.records[i];
    std::string where = std::string(source_name) + ":" + std::to_string(doc.lines[i]);
    if (!r.contains("surface") || !r["surface"].is_string()) {
      throw DataError(where + ": lexicon entry without surface");
    }
    std::string surface = r["surface"].get<std::string>();
    if (r.contains("trigger")) {
      lex.AddTrigger(surface, r["trigger"].get<std::string>());
    } else if (r.contains("role")) {
      lex.AddRole(surface, r["role"].get<std::string>(), r.value("event_type", std::string()));
    } else {
      throw DataError(where + ": lexicon entry needs \"role\" or \"trigger\"");
    }
  }
  return lex;
}

RoleLexicon RoleLexicon::Load(const std::filesystem::path &path) {
  return Parse(io::ReadFile(path), path.string());
}

std::string RoleLexicon::Dump() const {
  std::vector<Json> records;
  for (const auto &e : entries_) {
    Json r{{"surface", Join(e.surface)}};
    if (e.kind == LexiconEntry::Kind::kTrigger) {
      r["trigger"] = e.label;
    } else {
      r["role"] = e.label;
      if (!e.event_type.empty()) r["event_type"] = e.event_type;
    }
    records.push_back(std::move(r));
  }
  return io::DumpJsonl(records);
}

namespace {

class RuleExtractor : public ExtractorAdapter {
 public:
  explicit RuleExtractor(RoleLexicon lexicon) : lexicon_(std::move(lexicon)) {}

  std::string name() const override { return "rule"; }

  RawExtraction Run(const EventQuery &query) const override {
    TokenSeq lower;
    lower.reserve(query.tokens.size());
    for (const auto &t : query.tokens) lower.push_back(AsciiLower(t));

    RawExtraction out;
    TokenSeq mention(lower.begin() + static_cast<long>(query.mention.start),
                     lower.begin() + static_cast<long>(query.mention.end) + 1);
    for (const auto &e : lexicon_.entries()) {
      if (e.kind == LexiconEntry::Kind::kTrigger && e.surface == mention) {
        out.event_type = e.label;
        break;
      }
    }

    size_t i = 0;
    while (i < lower.size()) {
      const LexiconEntry *best = nullptr;
      for (const auto &e : lexicon_.entries()) {
        if (e.kind != LexiconEntry::Kind::kRole) continue;
        if (!e.event_type.empty() && e.event_type != out.event_type) continue;
        if (!Matches(lower, i, e.surface)) continue;
        if (best == nullptr || e.surface.size() > best->surface.size() ||
            (e.surface.size() == best->surface.size() && best->event_type.empty() &&
             !e.event_type.empty())) {
          best = &e;
        }
      }
      if (best != nullptr) {
        Span span{i, i + best->surface.size() - 1};
        if (!span.Overlaps(query.mention)) {
          out.arguments.push_back({span, best->label});
          i = span.end + 1;
          continue;
        }
      }
      ++i;
    }
    return out;
  }

 private:
  static bool Matches(const TokenSeq &tokens, size_t at, const TokenSeq &surface) {
    if (at + surface.size() > tokens.size()) return false;
    return std::equal(surface.begin(), surface.end(), tokens.begin() + static_cast<long>(at));
  }

  RoleLexicon lexicon_;
};

class NullExtractor : public ExtractorAdapter {
 public:
  std::string name() const override { return "none"; }
  RawExtraction Run(const EventQuery &) const override { return {}; }
};

}  // namespace

std::unique_ptr<ExtractorAdapter> MakeRuleExtractor(RoleLexicon lexicon) {
  return std::make_unique<RuleExtractor>(std::move(lexicon));
}

std::unique_ptr<ExtractorAdapter> MakeNullExtractor() {
  return std::make_unique<NullExtractor>();
}

}  // namespace evlink
