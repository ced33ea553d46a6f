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

#include "evlink/neggen.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <random>

#include "evlink/errors.h"
#include "evlink/parallel.h"

namespace evlink {

std::string_view ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kArgumentAware: return "argument_aware";
    case Provenance::kNonArgumentAware: return "non_argument_aware";
    case Provenance::kKbPruning: return "kb_pruning";
  }
  return "argument_aware";
}

Provenance ParseProvenance(std::string_view name) {
  if (name == "argument_aware" || name == "args") return Provenance::kArgumentAware;
  if (name == "non_argument_aware" || name == "plain") return Provenance::kNonArgumentAware;
  if (name == "kb_pruning" || name == "prune") return Provenance::kKbPruning;
  throw UsageError("unknown negative style \"" + std::string(name) + "\"");
}

Json NegativeToJson(const NegativeExample &n) {
  return {{"origin_query_id", n.origin_query_id},
          {"provenance", ProvenanceName(n.provenance)},
          {"paired_candidate_ids", n.paired_candidate_ids},
          {"query", TaggedToJson(n.query)}};
}

NegativeExample NegativeFromJson(const Json &r) {
  NegativeExample n;
  try {
    n.origin_query_id = r.at("origin_query_id").get<std::string>();
    n.provenance = ParseProvenance(r.at("provenance").get<std::string>());
    n.paired_candidate_ids = r.at("paired_candidate_ids").get<std::vector<std::string>>();
    n.query = TaggedFromJson(r.at("query"));
  } catch (const Json::exception &e) {
    throw DataError(std::string("malformed negative example: ") + e.what());
  } catch (const UsageError &e) {
    throw DataError(e.what());
  }
  if (!n.query.base.IsNil()) throw DataError("negative example with a non-NIL gold");
  if (n.provenance != Provenance::kKbPruning && n.paired_candidate_ids.empty()) {
    throw DataError("generated negative \"" + n.query.base.query_id +
                    "\" has no paired candidates");
  }
  return n;
}

std::string DumpNegatives(std::span<const NegativeExample> negatives,
                          const std::optional<Json> &manifest) {
  std::vector<Json> records;
  for (const auto &n : negatives) records.push_back(NegativeToJson(n));
  return io::DumpJsonl(records, manifest);
}

std::vector<NegativeExample> LoadNegatives(const std::filesystem::path &path) {
  io::JsonlDocument doc = io::ReadJsonl(path);
  std::vector<NegativeExample> out;
  for (size_t i = 0; i < doc.records.size(); ++i) {
    try {
      out.push_back(NegativeFromJson(doc.records[i]));
    } catch (const DataError &e) {
      throw DataError(path.string() + ":" + std::to_string(doc.lines[i]) + ": " + e.what());
    }
  }
  return out;
}

Json RecordToJson(const GenerationRecord &r) {
  return {{"origin_query_id", r.origin_query_id},
          {"prompt", r.prompt},
          {"completion", r.completion},
          {"plan1", r.plan1},
          {"passage1", r.passage1},
          {"plan2", r.plan2},
          {"passage2", r.passage2},
          {"status", r.accepted ? "accepted" : "rejected"},
          {"reason", r.reason}};
}

std::string DumpGenerationLog(std::span<const GenerationRecord> records,
                              const std::optional<Json> &manifest) {
  std::vector<Json> out;
  for (const auto &r : records) out.push_back(RecordToJson(r));
  return io::DumpJsonl(out, manifest);
}

bool IsNumericMention(const EventQuery &query) {
  std::string text;
  for (size_t i = query.mention.start; i <= query.mention.end; ++i) {
    for (char c : query.tokens[i]) {
      if (c != ',') text.push_back(c);
    }
  }
  if (text.empty()) return false;
  char *end = nullptr;
  std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size();
}

bool IsProperNounMention(const EventQuery &query) {
  auto sentence_initial = [&](size_t i) {
    if (i == 0) return true;
    const std::string &prev = query.tokens[i - 1];
    return prev == "." || prev == "!" || prev == "?";
  };
  int informative = 0;
  for (size_t i = query.mention.start; i <= query.mention.end; ++i) {
    const std::string &t = query.tokens[i];
    auto alpha = std::find_if(t.begin(), t.end(),
                              [](unsigned char c) { return std::isalpha(c) != 0; });
    if (alpha == t.end() || sentence_initial(i)) continue;
    if (!std::isupper(static_cast<unsigned char>(*alpha))) return false;
    ++informative;
  }
  return informative > 0;
}

std::vector<TaggedQuery> SampleFilter(std::span<const TaggedQuery> pool) {
  std::vector<TaggedQuery> out;
  for (const auto &q : pool) {
    if (q.arguments.size() < 2) continue;
    if (IsNumericMention(q.base) || IsProperNounMention(q.base)) continue;
    out.push_back(q);
  }
  return out;
}

std::string OriginalPassage(const TaggedQuery &query, Provenance style) {
  if (style == Provenance::kArgumentAware) return RenderTaggedPassage(query.base, query.arguments);
  return RenderTaggedPassage(query.base);
}

std::string BuildNegGenPrompt(const PromptLibrary &prompts, const TaggedQuery &query,
                              Provenance style) {
  if (style == Provenance::kKbPruning) {
    throw std::invalid_argument("KB pruning does not use a prompt");
  }
  const bool args = style == Provenance::kArgumentAware;
  const std::string stem = args ? "neggen_argument_aware" : "neggen_plain";
  std::map<std::string, std::string> values = {
      {"Example 1", prompts.Get(stem + "_example1")},
      {"Example 2", prompts.Get(stem + "_example2")},
      {"", OriginalPassage(query, style)},
  };
  if (args) {
    if (query.event_type.empty() || query.event_type == kUnknownEventType) {
      throw DataError("query \"" + query.base.query_id +
                      "\" has no event type for an argument-aware prompt");
    }
    const auto &t = query.base.tokens;
    values["event mention text span"] =
        Join(std::span<const Token>(t).subspan(query.base.mention.start,
                                               query.base.mention.length()));
    values["event type"] = query.event_type;
  }
  return FillTemplate(prompts.Get(stem), values);
}

namespace {

std::string FirstLine(std::string_view s) {
  return Trim(s.substr(0, s.find('\n')));
}

}  // namespace

ParsedCompletion ParseCompletion(const std::string &raw, Provenance style,
                                 const std::string &original_passage) {
  ParsedCompletion out;
  if (style == Provenance::kArgumentAware) {
    static constexpr std::string_view kMarks[] = {
        "Plan 1:",
        "Following Plan 1, we can generate this passage after Step 1:",
        "Plan 2:",
        "Following Plan 2, we can generate this passage after Step 2:",
    };
    size_t at[4];
    size_t from = 0;
    for (int i = 0; i < 4; ++i) {
      at[i] = raw.find(kMarks[i], from);
      if (at[i] == std::string::npos) {
        out.reason = "malformed completion: missing \"" + std::string(kMarks[i]) + "\"";
        return out;
      }
      from = at[i] + kMarks[i].size();
    }
    auto between = [&](int i) {
      size_t b = at[i] + kMarks[i].size();
      return Trim(std::string_view(raw).substr(b, at[i + 1] - b));
    };
    out.plan1 = between(0);
    out.passage1 = between(1);
    out.plan2 = between(2);
    out.passage2 = FirstLine(std::string_view(raw).substr(at[3] + kMarks[3].size()));
  } else {
    static constexpr std::string_view kMark = "New passage:";
    size_t at = raw.find(kMark);
    if (at == std::string::npos) {
      out.reason = "malformed completion: missing \"New passage:\"";
      return out;
    }
    out.passage2 = FirstLine(std::string_view(raw).substr(at + kMark.size()));
  }
  if (out.passage2.empty()) {
    out.reason = "malformed completion: empty passage";
    return out;
  }
  out.passage = ParseTaggedPassage(out.passage2);
  if (!out.passage.HasIntactMention()) {
    out.reason = "mention tags removed";
  } else if (style == Provenance::kArgumentAware && !out.passage.roles_balanced) {
    out.reason = "unbalanced role tags";
  } else if (out.passage2 == Trim(original_passage)) {
    out.reason = "unchanged";
  } else {
    out.accepted = true;
  }
  return out;
}

NegGenResult GenerateNegatives(std::span<const TaggedQuery> pool,
                               const DenseRetriever &retriever,
                               TextCompletionClient &client, const PromptLibrary &prompts,
                               Provenance style, const NegGenConfig &config) {
  if (style == Provenance::kKbPruning) {
    throw std::invalid_argument("use KbPruningNegatives for the pruning baseline");
  }
  std::vector<TaggedQuery> order = SampleFilter(pool);
  std::sort(order.begin(), order.end(), [](const TaggedQuery &a, const TaggedQuery &b) {
    return a.base.query_id < b.base.query_id;
  });
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);

  NegGenResult result;
  const size_t wave = static_cast<size_t>(std::max(1, config.max_in_flight));
  for (size_t begin = 0; begin < order.size() && result.negatives.size() < config.count;
       begin += wave) {
    const size_t n = std::min(wave, order.size() - begin);
    std::vector<GenerationRecord> records(n);
    std::vector<bool> transport_ok(n, false);
    ParallelFor(n, n, [&](size_t j) {
      const TaggedQuery &q = order[begin + j];
      GenerationRecord &rec = records[j];
      rec.origin_query_id = q.base.query_id;
      rec.prompt = BuildNegGenPrompt(prompts, q, style);
      std::string last_error;
      for (int attempt = 0; attempt < std::max(1, config.max_attempts); ++attempt) {
        try {
          rec.completion = client.Complete(rec.prompt);
          transport_ok[j] = true;
          return;
        } catch (const TransportError &e) {
          last_error = e.what();
        }
      }
      rec.reason = "transport error after " + std::to_string(std::max(1, config.max_attempts)) +
                   " attempts: " + last_error;
    });

    for (size_t j = 0; j < n && result.negatives.size() < config.count; ++j) {
      const TaggedQuery &origin = order[begin + j];
      GenerationRecord &rec = records[j];
      if (transport_ok[j]) {
        ParsedCompletion parsed =
            ParseCompletion(rec.completion, style, OriginalPassage(origin, style));
        rec.plan1 = parsed.plan1;
        rec.passage1 = parsed.passage1;
        rec.plan2 = parsed.plan2;
        rec.passage2 = parsed.passage2;
        rec.reason = parsed.reason;
        if (parsed.accepted) {
          EventQuery base;
          base.query_id = origin.base.query_id + "#neg";
          base.tokens = parsed.passage.tokens;
          base.mention = *parsed.passage.mention;
          base.pos = origin.base.pos;
          base.gold = std::string(kNilLabel);
          try {
            ValidateQuery(base);
            TaggedQuery tagged;
            if (style == Provenance::kArgumentAware) {
              tagged = EnforceTagInvariants(base, {origin.event_type, parsed.passage.arguments});
            } else if (config.retagger != nullptr) {
              tagged = Extract(*config.retagger, base);
            } else {
              tagged = EnforceTagInvariants(base, {origin.event_type, {}});
            }
            NegativeExample neg;
            neg.query = std::move(tagged);
            neg.origin_query_id = origin.base.query_id;
            neg.paired_candidate_ids = retriever.Retrieve(origin, config.k).Ids();
            neg.provenance = style;
            result.negatives.push_back(std::move(neg));
            rec.accepted = true;
          } catch (const DataError &e) {
            rec.reason = std::string("invalid generated query: ") + e.what();
          }
        }
      }
      result.log.push_back(std::move(rec));
    }
  }
  std::sort(result.negatives.begin(), result.negatives.end(),
            [](const NegativeExample &a, const NegativeExample &b) {
              return a.origin_query_id < b.origin_query_id;
            });
  return result;
}

PruningResult KbPruningNegatives(std::span<const TaggedQuery> train, double prune_fraction,
                                 uint64_t seed) {
  if (!(prune_fraction > 0.0 && prune_fraction < 1.0)) {
    throw std::invalid_argument("prune fraction must lie strictly between 0 and 1");
  }
  std::vector<std::string> labels;
  for (const auto &q : train) {
    if (!q.base.IsNil()) labels.push_back(q.base.gold);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const size_t n = static_cast<size_t>(
      std::ceil(prune_fraction * static_cast<double>(labels.size()) - 1e-9));

  PruningResult out;
  std::mt19937_64 rng(seed);
  std::sample(labels.begin(), labels.end(), std::back_inserter(out.pruned_labels), n, rng);
  std::sort(out.pruned_labels.begin(), out.pruned_labels.end());
  out.queries.assign(train.begin(), train.end());
  for (auto &q : out.queries) {
    if (!q.base.IsNil() &&
        std::binary_search(out.pruned_labels.begin(), out.pruned_labels.end(), q.base.gold)) {
      q.base.gold = std::string(kNilLabel);
      out.relabeled_ids.push_back(q.base.query_id);
    }
  }
  return out;
}

}  // namespace evlink
