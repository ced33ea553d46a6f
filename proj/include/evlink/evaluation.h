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

#ifndef EVLINK_EVALUATION_H_
#define EVLINK_EVALUATION_H_

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evlink/extraction.h"
#include "evlink/io.h"
#include "evlink/rerank.h"
#include "evlink/retrieval.h"

namespace evlink {

inline constexpr std::array<size_t, 9> kRecallGrid = {1, 2, 3, 4, 5, 8, 10, 15, 20};

struct SplitAccuracy {
  size_t correct = 0;
  size_t total = 0;
  // Absent for an empty split.
  std::optional<double> ratio() const;
};

struct Accuracy {
  SplitAccuracy all, verb, noun, in_kb, out_of_kb;
};

// Exact match of prediction and gold. Every decision must match exactly one
// gold query and every gold query must have a decision.
Accuracy ComputeAccuracy(std::span<const LinkDecision> decisions,
                         std::span<const EventQuery> golds);

// Fraction of in-KB queries whose gold is within the first k candidates.
// Throws std::invalid_argument if some k exceeds the shallowest candidate
// list; NIL-gold queries are skipped.
std::map<size_t, double> RecallAtK(std::span<const CandidateSet> candidates,
                                   std::span<const EventQuery> golds,
                                   std::span<const size_t> ks);

// Digest of the (query_id, gold) pairs, independent of file order.
std::string DatasetFingerprint(std::span<const EventQuery> golds);

struct EvalReport {
  Accuracy accuracy;
  std::map<size_t, double> recall_at;
  size_t recall_count = 0;
  std::string fingerprint;

  Json ToJson() const;
  static EvalReport FromJson(const Json &doc);
};

EvalReport Evaluate(std::span<const LinkDecision> decisions, std::span<const EventQuery> golds,
                    std::span<const CandidateSet> candidates = {});

inline constexpr std::array<const char *, 5> kCompareColumns = {
    "accuracy_all", "accuracy_verb", "accuracy_noun", "accuracy_in_kb", "accuracy_out_of_kb"};

// One row per run and, for each column, the runs attaining its maximum.
// Throws DataError when the runs were scored on different datasets.
Json CompareReport(std::span<const std::pair<std::string, EvalReport>> runs);
std::string CompareMarkdown(const Json &comparison);

}  // namespace evlink

#endif  // EVLINK_EVALUATION_H_
