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

#include "evlink/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "evlink/errors.h"

namespace evlink {

TrainConfig TrainConfig::BiEncoderDefaults() { return {}; }

TrainConfig TrainConfig::CrossEncoderDefaults() {
  TrainConfig c;
  c.learning_rate = 2e-5;
  c.batch_size = 6;
  c.epochs = 20;
  c.query_max_len = 256;
  c.candidate_max_len = 256;
  return c;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (epochs == 0) throw UsageError("epochs must be positive");
  if (query_max_len < 3 || candidate_max_len < 1) throw UsageError("max lengths too small");
  if (k == 0) throw UsageError("k must be positive");
  if (optimizer != "sgd" && optimizer != "adam") {
    throw UsageError("unknown optimizer \"" + optimizer + "\"");
  }
}

Json TrainConfig::ToJson() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size},
          {"epochs", epochs},               {"query_max_len", query_max_len},
          {"candidate_max_len", candidate_max_len},
          {"seed", seed},                   {"k", k},
          {"optimizer", optimizer},         {"negative_ratio", negative_ratio}};
}

TrainConfig TrainConfig::FromJson(const Json &doc) {
  TrainConfig c;
  try {
    c.learning_rate = doc.at("learning_rate").get<double>();
    c.batch_size = doc.at("batch_size").get<size_t>();
    c.epochs = doc.at("epochs").get<size_t>();
    c.query_max_len = doc.at("query_max_len").get<size_t>();
    c.candidate_max_len = doc.at("candidate_max_len").get<size_t>();
    c.seed = doc.at("seed").get<uint64_t>();
    c.k = doc.at("k").get<size_t>();
    c.optimizer = doc.at("optimizer").get<std::string>();
    c.negative_ratio = doc.at("negative_ratio").get<double>();
  } catch (const Json::exception &e) {
    throw DataError(std::string("malformed training config: ") + e.what());
  }
  return c;
}

Json TrainReport::ToJson() const {
  Json doc = {{"model", model},
              {"epoch_losses", epoch_losses},
              {"examples", examples},
              {"checkpoint", checkpoint},
              {"config", config.ToJson()}};
  doc["validation"] = validation ? Json(*validation) : Json(nullptr);
  doc["validation_metric"] = validation_metric;
  return doc;
}

namespace {

void CheckFinite(double loss, const std::string &what, size_t epoch, size_t step) {
  if (!std::isfinite(loss)) {
    throw TrainingError(what + " loss became non-finite (" + std::to_string(loss) +
                        ") at epoch " + std::to_string(epoch + 1) + ", step " +
                        std::to_string(step + 1));
  }
}

void ScaleGrads(GradBuffer &grads, double s) {
  for (auto &g : grads) {
    for (double &x : g) x *= s;
  }
}

}  // namespace

double BiEncoderBatchLoss(const TinyEncoder &query_tower, const TinyEncoder &candidate_tower,
                          std::span<const BiExample> batch, GradBuffer *grads) {
  const size_t b = batch.size();
  if (b == 0) throw std::invalid_argument("empty batch");
  const size_t d = query_tower.dim();
  std::vector<TinyEncoder::Cache> qc(b), cc(b);
  std::vector<const Embedding *> q(b), c(b);
  for (size_t i = 0; i < b; ++i) {
    q[i] = &query_tower.Forward(batch[i].query, &qc[i]);
    c[i] = &candidate_tower.Forward(batch[i].candidate, &cc[i]);
  }
  double total = 0.0;
  std::vector<std::vector<double>> g(b, std::vector<double>(b));
  for (size_t i = 0; i < b; ++i) {
    std::vector<double> logits(b);
    for (size_t j = 0; j < b; ++j) logits[j] = Dot(*q[i], *c[j]);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    total += std::log(z) + mx - logits[i];
    for (size_t j = 0; j < b; ++j) {
      g[i][j] = (std::exp(logits[j] - mx) / z - (i == j ? 1.0 : 0.0)) / static_cast<double>(b);
    }
  }
  if (grads != nullptr) {
    std::vector<double> dq(d), dc(d);
    for (size_t i = 0; i < b; ++i) {
      std::fill(dq.begin(), dq.end(), 0.0);
      std::fill(dc.begin(), dc.end(), 0.0);
      for (size_t j = 0; j < b; ++j) {
        for (size_t t = 0; t < d; ++t) {
          dq[t] += g[i][j] * (*c[j])[t];
          dc[t] += g[j][i] * (*q[j])[t];
        }
      }
      query_tower.Backward(qc[i], dq, *grads, 0);
      candidate_tower.Backward(cc[i], dc, *grads, TinyEncoder::kNumBlocks);
    }
  }
  return total / static_cast<double>(b);
}

TrainReport TrainBiEncoder(std::span<const BiExample> data, BiEncoder &model,
                           const TrainConfig &config) {
  config.Validate();
  auto *q = dynamic_cast<TinyEncoder *>(model.query.get());
  auto *c = dynamic_cast<TinyEncoder *>(model.candidate.get());
  if (q == nullptr || c == nullptr) throw UsageError("only tiny encoders can be trained");
  if (data.size() < config.batch_size) {
    throw DataError("training set (" + std::to_string(data.size()) +
                    " pairs) is smaller than the batch size");
  }
  std::vector<ParamBlock> blocks = q->Blocks();
  for (auto &b : c->Blocks()) blocks.push_back(b);
  Optimizer opt(config.optimizer, config.learning_rate);

  TrainReport report;
  report.model = "biencoder";
  report.config = config;
  report.examples = data.size();
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(data.size());
  std::vector<BiExample> batch;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    size_t steps = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(data[order[i]]);
      }
      GradBuffer grads = ZeroGrads(blocks);
      double loss = BiEncoderBatchLoss(*q, *c, batch, &grads);
      CheckFinite(loss, "bi-encoder", epoch, steps);
      opt.Step(blocks, grads);
      sum += loss;
      ++steps;
    }
    report.epoch_losses.push_back(sum / static_cast<double>(steps));
  }
  return report;
}

std::vector<CandidateSet> MineCandidates(std::span<const TaggedQuery> queries,
                                         const DenseRetriever &retriever, size_t k) {
  std::vector<CandidateSet> out;
  out.reserve(queries.size());
  for (const auto &q : queries) {
    CandidateSet set = retriever.Retrieve(q, k);
    if (!q.base.IsNil() && !set.RankOf(q.base.gold)) {
      auto score = retriever.ScoreOf(q, q.base.gold);
      if (!score) {
        throw DataError("query \"" + q.base.query_id + "\": gold \"" + q.base.gold +
                        "\" is not in the index");
      }
      set.candidates.back() = {q.base.gold, *score};
      set.gold_injected = true;
    }
    out.push_back(std::move(set));
  }
  return out;
}

CandidateSet PairedCandidates(const NegativeExample &negative) {
  CandidateSet set;
  set.query_id = negative.query.base.query_id;
  for (const auto &id : negative.paired_candidate_ids) set.candidates.push_back({id, 0.0});
  return set;
}

CrossExample MakeCrossExample(const CrossScorer &scorer, const TaggedQuery &query,
                              const CandidateSet &candidates, const KnowledgeBase &kb,
                              FormatStyle style, size_t query_max_len) {
  CrossExample ex;
  ex.key = query.base.query_id;
  ex.query = FormatQuery(query, style, query_max_len);
  ex.candidates = CandidateTexts(scorer, ex.query, candidates, kb);
  if (!query.base.IsNil()) {
    auto rank = candidates.RankOf(query.base.gold);
    if (!rank) {
      throw DataError("query \"" + query.base.query_id +
                      "\": gold is missing from its mined candidates");
    }
    ex.target = *rank + 1;
  }
  return ex;
}

double CrossEncoderBatchLoss(const CrossScorer &scorer, std::span<const CrossExample> batch,
                             GradBuffer *grads) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  double total = 0.0;
  for (const auto &ex : batch) total += scorer.Loss(ex.query, ex.candidates, ex.target, grads);
  if (grads != nullptr) ScaleGrads(*grads, 1.0 / static_cast<double>(batch.size()));
  return total / static_cast<double>(batch.size());
}

TrainReport TrainCrossEncoder(std::span<const CrossExample> positives,
                              std::span<const CrossExample> negatives, CrossScorer &scorer,
                              const TrainConfig &config) {
  config.Validate();
  if (!scorer.trainable()) throw UsageError("cross scorer is frozen");
  auto by_key = [](const CrossExample *a, const CrossExample *b) { return a->key < b->key; };
  std::mt19937_64 rng(config.seed);

  std::vector<const CrossExample *> negs;
  for (const auto &n : negatives) negs.push_back(&n);
  std::sort(negs.begin(), negs.end(), by_key);
  if (config.negative_ratio > 0.0) {
    const size_t cap = static_cast<size_t>(
        std::ceil(config.negative_ratio * static_cast<double>(positives.size()) - 1e-9));
    if (negs.size() > cap) {
      std::shuffle(negs.begin(), negs.end(), rng);
      negs.resize(cap);
    }
  }
  std::vector<const CrossExample *> pool;
  for (const auto &p : positives) pool.push_back(&p);
  pool.insert(pool.end(), negs.begin(), negs.end());
  std::sort(pool.begin(), pool.end(), by_key);
  if (pool.empty()) throw DataError("no cross-encoder training examples");

  std::vector<ParamBlock> blocks = scorer.Blocks();
  Optimizer opt(config.optimizer, config.learning_rate);
  TrainReport report;
  report.model = "crossencoder";
  report.config = config;
  report.examples = pool.size();
  std::vector<CrossExample> batch;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    double sum = 0.0;
    size_t steps = 0;
    for (size_t start = 0; start < pool.size(); start += config.batch_size) {
      batch.clear();
      for (size_t i = start; i < std::min(pool.size(), start + config.batch_size); ++i) {
        batch.push_back(*pool[i]);
      }
      GradBuffer grads = ZeroGrads(blocks);
      double loss = CrossEncoderBatchLoss(scorer, batch, &grads);
      CheckFinite(loss, "cross-encoder", epoch, steps);
      opt.Step(blocks, grads);
      sum += loss;
      ++steps;
    }
    report.epoch_losses.push_back(sum / static_cast<double>(steps));
  }
  return report;
}

}  // namespace evlink
