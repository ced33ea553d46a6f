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

#include "evlink/bm25.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "evlink/formatting.h"

namespace evlink {

Bm25Index Bm25Index::Build(const KnowledgeBase &kb, Bm25Params params) {
  if (!(params.k1 > 0.0) || params.b < 0.0 || params.b > 1.0) {
    throw std::invalid_argument("BM25 needs k1 > 0 and 0 <= b <= 1");
  }
  Bm25Index index;
  index.params_ = params;
  size_t total = 0;
  for (const auto &e : kb) {
    std::unordered_map<std::string, unsigned> counts;
    size_t len = 0;
    for (const auto &t : CandidateText(e, params.doc_max_len)) {
      if (IsMarker(t)) continue;
      ++counts[AsciiLower(t)];
      ++len;
    }
    for (const auto &[term, _] : counts) ++index.df_[term];
    index.ids_.push_back(e.id);
    index.doc_len_.push_back(len);
    index.term_counts_.push_back(std::move(counts));
    total += len;
  }
  index.avgdl_ = kb.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(kb.size());
  return index;
}

size_t Bm25Index::DocFreq(const std::string &term) const {
  auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

double Bm25Index::Idf(const std::string &term) const {
  const double n = static_cast<double>(ids_.size());
  const double df = static_cast<double>(DocFreq(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::Score(std::span<const std::string> terms, size_t doc) const {
  const auto &counts = term_counts_[doc];
  const double norm = params_.k1 * (1.0 - params_.b +
                                    params_.b * static_cast<double>(doc_len_[doc]) /
                                        (avgdl_ > 0.0 ? avgdl_ : 1.0));
  double score = 0.0;
  for (const auto &term : terms) {
    auto it = counts.find(term);
    if (it == counts.end()) continue;
    const double tf = it->second;
    score += Idf(term) * tf * (params_.k1 + 1.0) / (tf + norm);
  }
  return score;
}

CandidateSet Bm25Index::RetrieveTerms(std::span<const std::string> terms, size_t k,
                                      std::string query_id) const {
  if (k < 1 || k > ids_.size()) {
    throw std::invalid_argument("k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(ids_.size()) + "]");
  }
  std::vector<double> scores(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) scores[i] = Score(terms, i);
  std::vector<size_t> order(ids_.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                    [&](size_t a, size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  CandidateSet out;
  out.query_id = std::move(query_id);
  for (size_t r = 0; r < k; ++r) out.candidates.push_back({ids_[order[r]], scores[order[r]]});
  return out;
}

std::vector<std::string> Bm25Index::QueryTerms(const EventQuery &query) const {
  Span w = CenteredWindow(query.tokens.size(), query.mention, params_.window);
  std::vector<std::string> terms;
  for (size_t i = w.start; i <= w.end; ++i) terms.push_back(AsciiLower(query.tokens[i]));
  return terms;
}

CandidateSet Bm25Index::Retrieve(const EventQuery &query, size_t k) const {
  return RetrieveTerms(QueryTerms(query), k, query.query_id);
}

}  // namespace evlink
