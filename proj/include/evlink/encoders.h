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

#ifndef EVLINK_ENCODERS_H_
#define EVLINK_ENCODERS_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "evlink/io.h"
#include "evlink/tokens.h"

namespace evlink {

using Embedding = std::vector<double>;

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> a);
// Scales v to unit length. Throws std::domain_error on a zero vector.
void NormalizeInPlace(std::span<double> v);

// A named, contiguous slice of model parameters.
struct ParamBlock {
  std::string name;
  std::span<double> values;
};

// Dense gradient storage aligned with a model's parameter blocks.
using GradBuffer = std::vector<std::vector<double>>;

GradBuffer ZeroGrads(std::span<const ParamBlock> blocks);

// Maps a token sequence to a unit-norm embedding of fixed dimension.
// Encode is deterministic for fixed parameters and safe to call
// concurrently; training code holds exclusive access while updating.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::string kind() const = 0;
  virtual size_t dim() const = 0;
  virtual bool trainable() const = 0;
  // Throws std::invalid_argument on an empty sequence.
  virtual Embedding Encode(std::span<const Token> tokens) const = 0;
  virtual Json ToJson() const = 0;
  virtual std::unique_ptr<TextEncoder> Clone() const = 0;

  // SHA-256 of the serialized parameters.
  std::string Fingerprint() const;
};

// Each token maps to a pseudo-random unit vector: a splitmix64 stream whose
// state starts at fnv1a64(token) ^ (seed * 0x9E3779B97F4A7C15) yields
// uniform doubles (top 53 bits), consumed pairwise by Box-Muller
// (sqrt(-2 ln(1 - u1)) * {cos, sin}(2 pi u2)); the Gaussian vector is then
// normalized. A sequence embeds as the normalized sum of its token vectors.
class HashingEncoder : public TextEncoder {
 public:
  HashingEncoder(size_t dim, uint64_t seed);

  std::string kind() const override { return "hashing"; }
  size_t dim() const override { return dim_; }
  bool trainable() const override { return false; }
  Embedding Encode(std::span<const Token> tokens) const override;
  Json ToJson() const override;
  std::unique_ptr<TextEncoder> Clone() const override;

  Embedding TokenVector(std::string_view token) const;
  uint64_t seed() const { return seed_; }

 private:
  size_t dim_;
  uint64_t seed_;
};

// Trainable bag encoder: mean of token embeddings, one affine map, then L2
// normalization. Non-marker tokens are lowercased before lookup; tokens
// outside the vocabulary share the [UNK] row.
class TinyEncoder : public TextEncoder {
 public:
  // Intermediate values of one forward pass, kept for Backward.
  struct Cache {
    std::vector<size_t> ids;
    std::vector<double> mean;
    std::vector<double> pre;  // affine output before normalization
    double norm = 0.0;
    Embedding out;
  };

  // `vocab` may omit [UNK]; it is added. Duplicates are rejected.
  TinyEncoder(std::vector<std::string> vocab, size_t dim, uint64_t seed);

  std::string kind() const override { return "tiny"; }
  size_t dim() const override { return dim_; }
  bool trainable() const override { return true; }
  Embedding Encode(std::span<const Token> tokens) const override;
  Json ToJson() const override;
  std::unique_ptr<TextEncoder> Clone() const override;
  static TinyEncoder FromJson(const Json &doc);

  const Embedding &Forward(std::span<const Token> tokens, Cache *cache) const;
  // Accumulates d(loss)/d(params) into `grads` (aligned with Blocks()),
  // given d(loss)/d(output).
  void Backward(const Cache &cache, std::span<const double> grad_out,
                GradBuffer &grads, size_t block_offset = 0) const;

  // Order: embeddings, weight, bias.
  std::vector<ParamBlock> Blocks();
  static constexpr size_t kNumBlocks = 3;

  size_t TokenId(std::string_view token) const;
  size_t unk_id() const { return unk_id_; }
  const std::vector<std::string> &vocab() const { return vocab_; }

 private:
  TinyEncoder() = default;
  void BuildIndex();

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, size_t> index_;
  size_t unk_id_ = 0;
  size_t dim_ = 0;
  std::vector<double> embeddings_;  // vocab x dim
  std::vector<double> weight_;      // dim x dim, row-major
  std::vector<double> bias_;        // dim
};

// Vocabulary normalization used by TinyEncoder.
std::string NormalizeForVocab(std::string_view token);

// Sorted, de-duplicated normalized tokens of all sequences plus [UNK].
std::vector<std::string> BuildVocabulary(
    std::span<const TokenSeq> corpora);

std::unique_ptr<TextEncoder> EncoderFromJson(const Json &doc);

// Query and candidate towers of a bi-encoder.
struct BiEncoder {
  std::unique_ptr<TextEncoder> query;
  std::unique_ptr<TextEncoder> candidate;

  BiEncoder() = default;
  BiEncoder(std::unique_ptr<TextEncoder> q, std::unique_ptr<TextEncoder> c)
      : query(std::move(q)), candidate(std::move(c)) {}
  BiEncoder(const BiEncoder &other);
  BiEncoder &operator=(const BiEncoder &other);
  BiEncoder(BiEncoder &&) = default;
  BiEncoder &operator=(BiEncoder &&) = default;

  Json ToJson() const;
  static BiEncoder FromJson(const Json &doc);
};

// Parameter updates. "sgd" is plain gradient descent; "adam" keeps
// per-parameter moment estimates.
class Optimizer {
 public:
  Optimizer(std::string kind, double learning_rate);
  void Step(std::span<const ParamBlock> blocks, const GradBuffer &grads);
  const std::string &kind() const { return kind_; }

 private:
  std::string kind_;
  double lr_;
  long steps_ = 0;
  GradBuffer m_, v_;
};

}  // namespace evlink

#endif  // EVLINK_ENCODERS_H_
