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

#ifndef EVLINK_RETRIEVAL_H_
#define EVLINK_RETRIEVAL_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evlink/encoders.h"
#include "evlink/extraction.h"
#include "evlink/formatting.h"
#include "evlink/io.h"
#include "evlink/kbstore.h"

namespace evlink {

struct ScoredCandidate {
  std::string id;
  double score = 0.0;
  friend bool operator==(const ScoredCandidate &, const ScoredCandidate &) = default;
};

// Ranked retrieval result for one query: scores non-increasing, ids
// distinct.
struct CandidateSet {
  std::string query_id;
  std::vector<ScoredCandidate> candidates;
  // Set by mining when the gold entry was forced into the last slot.
  bool gold_injected = false;

  size_t size() const { return candidates.size(); }
  std::vector<std::string> Ids() const;
  // 0-based rank of `id`, or nullopt.
  std::optional<size_t> RankOf(std::string_view id) const;
};

Json CandidateSetToJson(const CandidateSet &set);
CandidateSet CandidateSetFromJson(const Json &r);
std::vector<CandidateSet> LoadCandidates(const std::filesystem::path &path);
std::string DumpCandidates(std::span<const CandidateSet> sets,
                           const std::optional<Json> &manifest = std::nullopt);

// Row i holds the candidate-tower embedding of KB entry i. Immutable after
// construction; concurrent Retrieve calls are safe.
class DenseIndex {
 public:
  DenseIndex() = default;
  DenseIndex(std::vector<std::string> ids, size_t dim, std::vector<double> rows,
             std::string fingerprint, size_t candidate_max_len);

  size_t size() const { return ids_.size(); }
  size_t dim() const { return dim_; }
  const std::vector<std::string> &ids() const { return ids_; }
  std::span<const double> Row(size_t i) const {
    return {rows_.data() + i * dim_, dim_};
  }
  const std::string &fingerprint() const { return fingerprint_; }
  size_t candidate_max_len() const { return candidate_max_len_; }

  // Drops the listed ids, keeping the relative order of the rest.
  DenseIndex Without(std::span<const std::string> ids) const;

  Json ToJson() const;
  static DenseIndex FromJson(const Json &doc);

 private:
  std::vector<std::string> ids_;
  size_t dim_ = 0;
  std::vector<double> rows_;
  std::string fingerprint_;
  size_t candidate_max_len_ = 0;
};

// Encodes CandidateText(e, max_len) for every entry. Row order follows the
// KB regardless of `threads`. Throws DataError on an empty KB.
DenseIndex BuildIndex(const KnowledgeBase &kb, const TextEncoder &encoder,
                      size_t max_len, int threads = 1);

// Exact top-k by dot product; ties go to the lower KB position.
// Throws std::invalid_argument on a dimension mismatch or k outside [1, n].
CandidateSet Retrieve(const DenseIndex &index, std::span<const double> query,
                      size_t k, std::string query_id = {});

// Formats, encodes and retrieves in one call.
class DenseRetriever {
 public:
  DenseRetriever(const DenseIndex &index, const TextEncoder &query_encoder,
                 FormatStyle style, size_t query_max_len);
  CandidateSet Retrieve(const TaggedQuery &query, size_t k) const;
  // Dot product of the query with one indexed entry; nullopt if not indexed.
  std::optional<double> ScoreOf(const TaggedQuery &query, std::string_view id) const;
  const DenseIndex &index() const { return index_; }

 private:
  const DenseIndex &index_;
  const TextEncoder &encoder_;
  FormatStyle style_;
  size_t max_len_;
};

}  // namespace evlink

#endif  // EVLINK_RETRIEVAL_H_
