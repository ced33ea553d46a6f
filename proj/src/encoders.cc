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

#include "evlink/encoders.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "evlink/errors.h"

namespace evlink {

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

void NormalizeInPlace(std::span<double> v) {
  double n = Norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("cannot normalize a zero vector");
  for (double &x : v) x /= n;
}

GradBuffer ZeroGrads(std::span<const ParamBlock> blocks) {
  GradBuffer g;
  g.reserve(blocks.size());
  for (const auto &b : blocks) g.emplace_back(b.values.size(), 0.0);
  return g;
}

std::string TextEncoder::Fingerprint() const { return io::Sha256Hex(ToJson().dump()); }

namespace {

uint64_t SplitMix64(uint64_t &state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double UnitUniform(uint64_t &state) {
  return static_cast<double>(SplitMix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

HashingEncoder::HashingEncoder(size_t dim, uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw std::invalid_argument("hashing encoder needs dim >= 2");
}

Embedding HashingEncoder::TokenVector(std::string_view token) const {
  uint64_t state = Fnv1a64(token) ^ (seed_ * 0x9E3779B97F4A7C15ULL);
  Embedding v(dim_);
  for (size_t i = 0; i < dim_; i += 2) {
    double u1 = UnitUniform(state);
    double u2 = UnitUniform(state);
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    double theta = 2.0 * std::numbers::pi * u2;
    v[i] = r * std::cos(theta);
    if (i + 1 < dim_) v[i + 1] = r * std::sin(theta);
  }
  NormalizeInPlace(v);
  return v;
}

Embedding HashingEncoder::Encode(std::span<const Token> tokens) const {
  if (tokens.empty()) throw std::invalid_argument("cannot encode an empty sequence");
  Embedding sum(dim_, 0.0);
  for (const auto &t : tokens) {
    Embedding tv = TokenVector(t);
    for (size_t i = 0; i < dim_; ++i) sum[i] += tv[i];
  }
  NormalizeInPlace(sum);
  return sum;
}

Json HashingEncoder::ToJson() const {
  return {{"kind", "hashing"}, {"version", 1}, {"dim", dim_}, {"seed", seed_}};
}

std::unique_ptr<TextEncoder> HashingEncoder::Clone() const {
  return std::make_unique<HashingEncoder>(*this);
}

std::string NormalizeForVocab(std::string_view token) {
  return IsMarker(token) ? std::string(token) : AsciiLower(token);
}

std::vector<std::string> BuildVocabulary(std::span<const TokenSeq> corpora) {
  std::set<std::string> words;
  for (const auto &seq : corpora) {
    for (const auto &t : seq) words.insert(NormalizeForVocab(t));
  }
  words.insert(std::string(Markers::kUnknown));
  return {words.begin(), words.end()};
}

TinyEncoder::TinyEncoder(std::vector<std::string> vocab, size_t dim, uint64_t seed)
    : vocab_(std::move(vocab)), dim_(dim) {
  if (dim < 2) throw std::invalid_argument("tiny encoder needs dim >= 2");
  if (std::find(vocab_.begin(), vocab_.end(), Markers::kUnknown) == vocab_.end()) {
    vocab_.emplace_back(Markers::kUnknown);
  }
  BuildIndex();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  embeddings_.resize(vocab_.size() * dim_);
  for (double &x : embeddings_) x = unit(rng);
  weight_.resize(dim_ * dim_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
  for (double &x : weight_) x = unit(rng) * scale;
  bias_.assign(dim_, 0.0);
}

void TinyEncoder::BuildIndex() {
  index_.clear();
  for (size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], i).second) {
      throw DataError("duplicate vocabulary entry \"" + vocab_[i] + "\"");
    }
  }
  unk_id_ = index_.at(std::string(Markers::kUnknown));
}

size_t TinyEncoder::TokenId(std::string_view token) const {
  auto it = index_.find(NormalizeForVocab(token));
  return it == index_.end() ? unk_id_ : it->second;
}

const Embedding &TinyEncoder::Forward(std::span<const Token> tokens, Cache *cache) const {
  if (tokens.empty()) throw std::invalid_argument("cannot encode an empty sequence");
  cache->ids.resize(tokens.size());
  cache->mean.assign(dim_, 0.0);
  for (size_t t = 0; t < tokens.size(); ++t) {
    size_t id = TokenId(tokens[t]);
    cache->ids[t] = id;
    const double *row = &embeddings_[id * dim_];
    for (size_t k = 0; k < dim_; ++k) cache->mean[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double &x : cache->mean) x *= inv;
  cache->pre.assign(bias_.begin(), bias_.end());
  for (size_t r = 0; r < dim_; ++r) {
    const double *w = &weight_[r * dim_];
    double s = 0.0;
    for (size_t k = 0; k < dim_; ++k) s += w[k] * cache->mean[k];
    cache->pre[r] += s;
  }
  cache->norm = Norm(cache->pre);
  if (!(cache->norm > 0.0) || !std::isfinite(cache->norm)) {
    throw std::domain_error("tiny encoder produced a degenerate vector");
  }
  cache->out.resize(dim_);
  for (size_t k = 0; k < dim_; ++k) cache->out[k] = cache->pre[k] / cache->norm;
  return cache->out;
}

Embedding TinyEncoder::Encode(std::span<const Token> tokens) const {
  Cache cache;
  return Forward(tokens, &cache);
}

void TinyEncoder::Backward(const Cache &cache, std::span<const double> grad_out,
                           GradBuffer &grads, size_t block_offset) const {
  // d out / d pre = (I - out out^T) / norm
  double proj = Dot(cache.out, grad_out);
  std::vector<double> d_pre(dim_);
  for (size_t k = 0; k < dim_; ++k) {
    d_pre[k] = (grad_out[k] - cache.out[k] * proj) / cache.norm;
  }
  auto &g_emb = grads[block_offset];
  auto &g_w = grads[block_offset + 1];
  auto &g_b = grads[block_offset + 2];
  std::vector<double> d_mean(dim_, 0.0);
  for (size_t r = 0; r < dim_; ++r) {
    g_b[r] += d_pre[r];
    double *gw = &g_w[r * dim_];
    const double *w = &weight_[r * dim_];
    for (size_t k = 0; k < dim_; ++k) {
      gw[k] += d_pre[r] * cache.mean[k];
      d_mean[k] += w[k] * d_pre[r];
    }
  }
  const double inv = 1.0 / static_cast<double>(cache.ids.size());
  for (size_t id : cache.ids) {
    double *ge = &g_emb[id * dim_];
    for (size_t k = 0; k < dim_; ++k) ge[k] += d_mean[k] * inv;
  }
}

std::vector<ParamBlock> TinyEncoder::Blocks() {
  return {{"embeddings", embeddings_}, {"weight", weight_}, {"bias", bias_}};
}

Json TinyEncoder::ToJson() const {
  return {{"kind", "tiny"},       {"version", 1},         {"dim", dim_},
          {"vocab", vocab_},      {"embeddings", embeddings_}, {"weight", weight_},
          {"bias", bias_}};
}

std::unique_ptr<TextEncoder> TinyEncoder::Clone() const {
  return std::make_unique<TinyEncoder>(*this);
}

TinyEncoder TinyEncoder::FromJson(const Json &doc) {
  TinyEncoder enc;
  try {
    enc.dim_ = doc.at("dim").get<size_t>();
    enc.vocab_ = doc.at("vocab").get<std::vector<std::string>>();
    enc.embeddings_ = doc.at("embeddings").get<std::vector<double>>();
    enc.weight_ = doc.at("weight").get<std::vector<double>>();
    enc.bias_ = doc.at("bias").get<std::vector<double>>();
  } catch (const Json::exception &e) {
    throw DataError(std::string("malformed tiny encoder: ") + e.what());
  }
  if (enc.embeddings_.size() != enc.vocab_.size() * enc.dim_ ||
      enc.weight_.size() != enc.dim_ * enc.dim_ || enc.bias_.size() != enc.dim_) {
    throw DataError("tiny encoder parameter shapes do not match its dimension");
  }
  enc.BuildIndex();
  return enc;
}

std::unique_ptr<TextEncoder> EncoderFromJson(const Json &doc) {
  std::string kind = doc.value("kind", std::string());
  if (kind == "hashing") {
    return std::make_unique<HashingEncoder>(doc.at("dim").get<size_t>(),
                                            doc.at("seed").get<uint64_t>());
  }
  if (kind == "tiny") return std::make_unique<TinyEncoder>(TinyEncoder::FromJson(doc));
  throw DataError("unknown encoder kind \"" + kind + "\"");
}

BiEncoder::BiEncoder(const BiEncoder &other)
    : query(other.query ? other.query->Clone() : nullptr),
      candidate(other.candidate ? other.candidate->Clone() : nullptr) {}

BiEncoder &BiEncoder::operator=(const BiEncoder &other) {
  if (this != &other) {
    query = other.query ? other.query->Clone() : nullptr;
    candidate = other.candidate ? other.candidate->Clone() : nullptr;
  }
  return *this;
}

Json BiEncoder::ToJson() const {
  return {{"format", "evlink-biencoder"},
          {"version", 1},
          {"query_encoder", query->ToJson()},
          {"candidate_encoder", candidate->ToJson()}};
}

BiEncoder BiEncoder::FromJson(const Json &doc) {
  if (doc.value("format", std::string()) != "evlink-biencoder") {
    throw DataError("not a bi-encoder checkpoint");
  }
  return BiEncoder(EncoderFromJson(doc.at("query_encoder")),
                   EncoderFromJson(doc.at("candidate_encoder")));
}

Optimizer::Optimizer(std::string kind, double learning_rate)
    : kind_(std::move(kind)), lr_(learning_rate) {
  if (kind_ != "sgd" && kind_ != "adam") {
    throw UsageError("unknown optimizer \"" + kind_ + "\"");
  }
  if (!(lr_ > 0.0)) throw UsageError("learning rate must be positive");
}

void Optimizer::Step(std::span<const ParamBlock> blocks, const GradBuffer &grads) {
  ++steps_;
  if (kind_ == "sgd") {
    for (size_t b = 0; b < blocks.size(); ++b) {
      auto values = blocks[b].values;
      const auto &g = grads[b];
      for (size_t i = 0; i < values.size(); ++i) values[i] -= lr_ * g[i];
    }
    return;
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  if (m_.empty()) {
    m_ = ZeroGrads(blocks);
    v_ = ZeroGrads(blocks);
  }
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
  for (size_t b = 0; b < blocks.size(); ++b) {
    auto values = blocks[b].values;
    const auto &g = grads[b];
    auto &m = m_[b];
    auto &v = v_[b];
    for (size_t i = 0; i < values.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
      values[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  }
}

}  // namespace evlink
