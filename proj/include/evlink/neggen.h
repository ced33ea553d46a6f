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

#ifndef EVLINK_NEGGEN_H_
#define EVLINK_NEGGEN_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evlink/extraction.h"
#include "evlink/llm.h"
#include "evlink/retrieval.h"
#include "evlink/templates.h"

namespace evlink {

enum class Provenance { kArgumentAware, kNonArgumentAware, kKbPruning };
std::string_view ProvenanceName(Provenance p);
// Accepts the long names and the CLI aliases "args", "plain" and "prune".
Provenance ParseProvenance(std::string_view name);

struct NegativeExample {
  TaggedQuery query;  // gold is NIL
  std::string origin_query_id;
  std::vector<std::string> paired_candidate_ids;
  Provenance provenance = Provenance::kArgumentAware;
};

Json NegativeToJson(const NegativeExample &n);
NegativeExample NegativeFromJson(const Json &r);
std::string DumpNegatives(std::span<const NegativeExample> negatives,
                          const std::optional<Json> &manifest = std::nullopt);
std::vector<NegativeExample> LoadNegatives(const std::filesystem::path &path);

struct GenerationRecord {
  std::string origin_query_id;
  std::string prompt;
  std::string completion;
  std::string plan1, passage1, plan2, passage2;  // plain style fills passage2 only
  bool accepted = false;
  std::string reason;  // empty when accepted
};

Json RecordToJson(const GenerationRecord &r);
std::string DumpGenerationLog(std::span<const GenerationRecord> records,
                              const std::optional<Json> &manifest = std::nullopt);

bool IsNumericMention(const EventQuery &query);
bool IsProperNounMention(const EventQuery &query);

// Keeps queries whose mention is neither numeric nor a proper noun and that
// carry at least two arguments.
std::vector<TaggedQuery> SampleFilter(std::span<const TaggedQuery> pool);

// Fills the generation template for `style` (argument-aware or not).
std::string BuildNegGenPrompt(const PromptLibrary &prompts, const TaggedQuery &query,
                              Provenance style);

// The passage as shown to the generator.
std::string OriginalPassage(const TaggedQuery &query, Provenance style);

struct ParsedCompletion {
  bool accepted = false;
  std::string reason;
  std::string plan1, passage1, plan2, passage2;
  ParsedPassage passage;  // parse of the final passage
};

ParsedCompletion ParseCompletion(const std::string &raw, Provenance style,
                                 const std::string &original_passage);

struct NegGenConfig {
  size_t count = 200;
  uint64_t seed = 0;
  size_t k = 10;
  int max_in_flight = 4;
  int max_attempts = 3;  // per query, counting the first try
  // Tags plain-style generations, which carry no role tags of their own.
  const ExtractorAdapter *retagger = nullptr;
};

struct NegGenResult {
  std::vector<NegativeExample> negatives;  // ordered by origin query id
  std::vector<GenerationRecord> log;       // in attempt order
};

// Walks the filtered pool in seeded order until `count` generations are
// accepted or the pool runs out. Paired candidates come from retrieving
// the ORIGIN query.
NegGenResult GenerateNegatives(std::span<const TaggedQuery> pool,
                               const DenseRetriever &retriever,
                               TextCompletionClient &client, const PromptLibrary &prompts,
                               Provenance style, const NegGenConfig &config);

struct PruningResult {
  std::vector<std::string> pruned_labels;  // sorted
  std::vector<TaggedQuery> queries;        // input order, pruned golds set to NIL
  std::vector<std::string> relabeled_ids;
};

PruningResult KbPruningNegatives(std::span<const TaggedQuery> train, double prune_fraction,
                                 uint64_t seed);

}  // namespace evlink

#endif  // EVLINK_NEGGEN_H_
