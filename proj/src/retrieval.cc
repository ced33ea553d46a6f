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

#include "evlink/retrieval.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "evlink/errors.h"
#include "evlink/parallel.h"

namespace evlink {

std::vector<std::string> CandidateSet::Ids() const {
  std::vector<std::string> ids;
  ids.reserve(candidates.size());
  for (const auto &c : candidates) ids.push_back(c.id);
  return ids;
}

std::optional<size_t> CandidateSet::RankOf(std::string_view id) const {
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].id == id) return i;
  }
  return std::nullopt;
}

Json CandidateSetToJson(const CandidateSet &set) {
  Json cands = Json::array();
  for (const auto &c : set.candidates) cands.push_back({{"id", c.id}, {"score", c.score}});
  Json r{{"query_id", set.query_id}, {"candidates", std::move(cands)}};
  if (set.gold_injected) r["gold_injected"] = true;
  return r;
}

CandidateSet CandidateSetFromJson(const Json &r) {
  CandidateSet set;
  try {
    set.query_id = r.at("query_id").get<std::string>();
    for (const auto &c : r.at("candidates")) {
      set.candidates.push_back({c.at("id").get<std::string>(), c.at("score").get<double>()});
    }
    set.gold_injected = r.value("gold_injected", false);
  } catch (const Json::exception &e) {
    throw DataError(std::string("malformed candidate record: ") + e.what());
  }
  return set;
}

std::vector<CandidateSet> LoadCandidates(const std::filesystem::path &path) {
  io::JsonlDocument doc = io::ReadJsonl(path);
  std::vector<CandidateSet> out;
  for (size_t i = 0; i < doc.records.size(); ++i) {
    try {
      out.push_back(CandidateSetFromJson(doc.records[i]));
    } catch (const DataError &e) {
      throw DataError(path.string() + ":" + std::to_string(doc.lines[i]) + ": " + e.what());
    }
  }
  return out;
}

std::string DumpCandidates(std::span<const CandidateSet> sets,
                           const std::optional<Json> &manifest) {
  std::vector<Json> records;
  records.reserve(sets.size());
  for (const auto &s : sets) records.push_back(CandidateSetToJson(s));
  return io::DumpJsonl(records, manifest);
}

DenseIndex::DenseIndex(std::vector<std::string> ids, size_t dim, std::vector<double> rows,
                       std::string fingerprint, size_t candidate_max_len)
    : ids_(std::move(ids)),
      dim_(dim),
      rows_(std::move(rows)),
      fingerprint_(std::move(fingerprint)),
      candidate_max_len_(candidate_max_len) {
  if (rows_.size() != ids_.size() * dim_) {
    throw DataError("index rows do not match ids x dim");
  }
}

DenseIndex DenseIndex::Without(std::span<const std::string> ids) const {
  std::unordered_set<std::string> drop(ids.begin(), ids.end());
  std::vector<std::string> kept_ids;
  std::vector<double> kept_rows;
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (drop.count(ids_[i])) continue;
    kept_ids.push_back(ids_[i]);
    auto row = Row(i);
    kept_rows.insert(kept_rows.end(), row.begin(), row.end());
  }
  return DenseIndex(std::move(kept_ids), dim_, std::move(kept_rows), fingerprint_,
                    candidate_max_len_);
}

Json DenseIndex::ToJson() const {
  return {{"format", "evlink-dense-index"}, {"version", 1},
          {"encoder_fingerprint", fingerprint_}, {"candidate_max_len", candidate_max_len_},
          {"dim", dim_}, {"ids", ids_}, {"rows", rows_}};
}

DenseIndex DenseIndex::FromJson(const Json &doc) {
  if (doc.value("format", std::string()) != "evlink-dense-index") {
    throw DataError("not a dense index file");
  }
  try {
    return DenseIndex(doc.at("ids").get<std::vector<std::string>>(), doc.at("dim").get<size_t>(),
                      doc.at("rows").get<std::vector<double>>(),
                      doc.at("encoder_fingerprint").get<std::string>(),
                      doc.at("candidate_max_len").get<size_t>());
  } catch (const Json::exception &e) {
    throw DataError(std::string("malformed dense index: ") + e.what());
  }
}

DenseIndex BuildIndex(const KnowledgeBase &kb, const TextEncoder &encoder, size_t max_len,
                      int threads) {
  if (kb.empty()) throw DataError("cannot index an empty knowledge base");
  const size_t n = kb.size(), d = encoder.dim();
  std::vector<double> rows(n * d);
  size_t workers = threads > 1 ? static_cast<size_t>(threads) : 1;
  ParallelFor(n, workers, [&](size_t i) {
    Embedding e = encoder.Encode(CandidateText(kb[i], max_len));
    std::copy(e.begin(), e.end(), rows.begin() + static_cast<long>(i * d));
  });
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto &e : kb) ids.push_back(e.id);
  return DenseIndex(std::move(ids), d, std::move(rows), encoder.Fingerprint(), max_len);
}

CandidateSet Retrieve(const DenseIndex &index, std::span<const double> query, size_t k,
                      std::string query_id) {
  if (query.size() != index.dim()) {
    throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                " does not match index dimension " +
                                std::to_string(index.dim()));
  }
  if (k < 1 || k > index.size()) {
    throw std::invalid_argument("k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(index.size()) + "]");
  }
  std::vector<double> scores(index.size());
  for (size_t i = 0; i < index.size(); ++i) scores[i] = Dot(index.Row(i), query);
  std::vector<size_t> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                    [&](size_t a, size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  CandidateSet out;
  out.query_id = std::move(query_id);
  out.candidates.reserve(k);
  for (size_t r = 0; r < k; ++r) out.candidates.push_back({index.ids()[order[r]], scores[order[r]]});
  return out;
}

DenseRetriever::DenseRetriever(const DenseIndex &index, const TextEncoder &query_encoder,
                               FormatStyle style, size_t query_max_len)
    : index_(index), encoder_(query_encoder), style_(style), max_len_(query_max_len) {
  if (query_encoder.dim() != index.dim()) {
    throw DataError("query encoder dimension does not match the index");
  }
}

CandidateSet DenseRetriever::Retrieve(const TaggedQuery &query, size_t k) const {
  Embedding q = encoder_.Encode(FormatQuery(query, style_, max_len_));
  return evlink::Retrieve(index_, q, std::min(k, index_.size()), query.base.query_id);
}

std::optional<double> DenseRetriever::ScoreOf(const TaggedQuery &query,
                                              std::string_view id) const {
  const auto &ids = index_.ids();
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  Embedding q = encoder_.Encode(FormatQuery(query, style_, max_len_));
  return Dot(index_.Row(static_cast<size_t>(it - ids.begin())), q);
}

}  // namespace evlink
