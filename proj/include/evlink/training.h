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

#ifndef EVLINK_TRAINING_H_
#define EVLINK_TRAINING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evlink/encoders.h"
#include "evlink/formatting.h"
#include "evlink/io.h"
#include "evlink/kbstore.h"
#include "evlink/neggen.h"
#include "evlink/rerank.h"
#include "evlink/retrieval.h"

namespace evlink {

// Raised when a loss becomes NaN or infinite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 1e-5;
  size_t batch_size = 48;
  size_t epochs = 15;
  size_t query_max_len = 300;
  size_t candidate_max_len = 300;
  uint64_t seed = 0;
  size_t k = 10;
  std::string optimizer = "sgd";
  // Cross-encoder only: negatives kept per positive; <= 0 keeps all.
  double negative_ratio = 0.1;

  static TrainConfig BiEncoderDefaults();
  static TrainConfig CrossEncoderDefaults();
  void Validate() const;
  Json ToJson() const;
  static TrainConfig FromJson(const Json &doc);
};

struct TrainReport {
  std::string model;  // "biencoder" or "crossencoder"
  std::vector<double> epoch_losses;
  size_t examples = 0;
  std::optional<double> validation;
  std::string validation_metric;
  std::string checkpoint;
  TrainConfig config;

  Json ToJson() const;
};

struct BiExample {
  TokenSeq query;      // formatted query
  TokenSeq candidate;  // candidate text of the gold entry
};

// Mean in-batch cross-entropy with logits[i][j] = q_i . c_j. When `grads` is
// given, gradients are accumulated into it: query-tower blocks first, then
// candidate-tower blocks.
double BiEncoderBatchLoss(const TinyEncoder &query_tower, const TinyEncoder &candidate_tower,
                          std::span<const BiExample> batch, GradBuffer *grads);

// Both towers of `model` must be tiny encoders.
TrainReport TrainBiEncoder(std::span<const BiExample> data, BiEncoder &model,
                           const TrainConfig &config);

// Top-k per query. An in-KB query whose gold was missed gets it in the last
// slot (with its own score) and is flagged; NIL queries are left alone.
std::vector<CandidateSet> MineCandidates(std::span<const TaggedQuery> queries,
                                         const DenseRetriever &retriever, size_t k);

CandidateSet PairedCandidates(const NegativeExample &negative);

struct CrossExample {
  std::string key;
  TokenSeq query;
  std::vector<TokenSeq> candidates;
  size_t target = 0;  // 0 = NIL
};

// Throws DataError for an in-KB query whose gold is not among the candidates.
CrossExample MakeCrossExample(const CrossScorer &scorer, const TaggedQuery &query,
                              const CandidateSet &candidates, const KnowledgeBase &kb,
                              FormatStyle style, size_t query_max_len);

// Mean (k+1)-way cross-entropy over a batch; gradients as in
// CrossScorer::Loss, scaled by 1/|batch|.
double CrossEncoderBatchLoss(const CrossScorer &scorer, std::span<const CrossExample> batch,
                             GradBuffer *grads);

TrainReport TrainCrossEncoder(std::span<const CrossExample> positives,
                              std::span<const CrossExample> negatives, CrossScorer &scorer,
                              const TrainConfig &config);

}  // namespace evlink

#endif  // EVLINK_TRAINING_H_
