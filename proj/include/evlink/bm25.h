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

#ifndef EVLINK_BM25_H_
#define EVLINK_BM25_H_

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "evlink/extraction.h"
#include "evlink/kbstore.h"
#include "evlink/retrieval.h"

namespace evlink {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  // Query terms are this many tokens centered on the mention.
  size_t window = 16;
  // Documents are CandidateText(entry, doc_max_len) minus markers.
  size_t doc_max_len = 300;
};

// Okapi BM25 over lowercased candidate-text terms, with the non-negative
// idf ln(1 + (N - df + 0.5) / (df + 0.5)). Query terms are summed once per
// occurrence.
class Bm25Index {
 public:
  static Bm25Index Build(const KnowledgeBase &kb, Bm25Params params = {});

  size_t size() const { return ids_.size(); }
  const Bm25Params &params() const { return params_; }
  double avg_doc_len() const { return avgdl_; }
  size_t DocFreq(const std::string &term) const;
  double Idf(const std::string &term) const;

  double Score(std::span<const std::string> terms, size_t doc) const;
  CandidateSet RetrieveTerms(std::span<const std::string> terms, size_t k,
                             std::string query_id = {}) const;
  CandidateSet Retrieve(const EventQuery &query, size_t k) const;

  // Lowercased query terms: the window around the mention.
  std::vector<std::string> QueryTerms(const EventQuery &query) const;

 private:
  Bm25Params params_;
  std::vector<std::string> ids_;
  std::vector<std::unordered_map<std::string, unsigned>> term_counts_;
  std::vector<size_t> doc_len_;
  std::unordered_map<std::string, size_t> df_;
  double avgdl_ = 0.0;
};

}  // namespace evlink

#endif  // EVLINK_BM25_H_
