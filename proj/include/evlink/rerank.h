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

#ifndef EVLINK_RERANK_H_
#define EVLINK_RERANK_H_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evlink/encoders.h"
#include "evlink/io.h"
#include "evlink/kbstore.h"
#include "evlink/llm.h"
#include "evlink/retrieval.h"
#include "evlink/templates.h"

namespace evlink {

// Token-overlap features of a (query, candidate) pair: the fraction of the
// query's argument tokens, mention tokens and remaining context tokens that
// occur in the candidate text (case-insensitive, markers ignored).
inline constexpr size_t kNumLexicalFeatures = 3;
using LexicalFeatures = std::array<double, kNumLexicalFeatures>;
LexicalFeatures PairFeatures(std::span<const Token> query,
                             std::span<const Token> candidate);

// Pair input as fed to the scorer: query tokens, [SEP], candidate tokens.
TokenSeq PairTokens(std::span<const Token> query, std::span<const Token> candidate);

// Scores a pair from the query-tower vector h and the candidate-tower vector
// v as  sum(w_int * h * v) + w_cand . v + alpha . features.  The NIL option
// uses the learned nil embedding in place of v and zero features.
class CrossScorer {
 public:
  struct Options {
    size_t max_len = 256;
    bool trainable = true;
  };

  CrossScorer(TinyEncoder query_tower, TinyEncoder candidate_tower, uint64_t seed,
              Options options);
  // Starts both towers from a trained bi-encoder (which must use tiny encoders).
  static CrossScorer FromBiEncoder(const BiEncoder &bi, uint64_t seed, Options options);

  size_t dim() const { return query_tower_.dim(); }
  size_t max_len() const { return options_.max_len; }
  bool trainable() const { return options_.trainable; }
  void set_trainable(bool t) { options_.trainable = t; }
  const std::vector<double> &nil_embedding() const { return nil_; }

  // Scores [NIL, c_1 .. c_k] for already-serialized candidate texts.
  std::vector<double> ScoreAll(std::span<const Token> query,
                               std::span<const TokenSeq> candidates) const;

  // (k+1)-way cross-entropy of `target` (0 = NIL) and, when `grads` is
  // given, accumulation of its gradient (aligned with Blocks()).
  double Loss(std::span<const Token> query, std::span<const TokenSeq> candidates,
              size_t target, GradBuffer *grads) const;

  // Query tower, candidate tower, then interaction, candidate weight,
  // feature weights and nil embedding.
  std::vector<ParamBlock> Blocks();
  static constexpr size_t kNumBlocks = 2 * TinyEncoder::kNumBlocks + 4;

  Json ToJson() const;
  static CrossScorer FromJson(const Json &doc);
  std::string Fingerprint() const;

 private:
  CrossScorer() = default;

  TinyEncoder query_tower_{{}, 2, 0};
  TinyEncoder candidate_tower_{{}, 2, 0};
  std::vector<double> w_int_;
  std::vector<double> w_cand_;
  std::vector<double> alpha_;
  std::vector<double> nil_;
  Options options_;
};

// Candidate text of every candidate, sized to the scorer's budget.
std::vector<TokenSeq> CandidateTexts(const CrossScorer &scorer,
                                     std::span<const Token> query,
                                     const CandidateSet &candidates,
                                     const KnowledgeBase &kb);

// Vector of length k+1; index 0 is the NIL score. Throws DataError for an
// id missing from `kb`.
std::vector<double> ScorePairs(const CrossScorer &scorer, std::span<const Token> query,
                               const CandidateSet &candidates, const KnowledgeBase &kb);

enum class DecisionRule { kLearnedNil, kThreshold, kLlm };
std::string_view RuleName(DecisionRule rule);
DecisionRule ParseRule(std::string_view name);

struct LinkDecision {
  std::string query_id;
  std::string prediction;
  DecisionRule rule = DecisionRule::kLearnedNil;
  std::vector<double> scores;  // index 0 = NIL
  std::string annotation;

  bool IsNil() const { return prediction == kNilLabel; }
};

LinkDecision SelectLearnedNil(std::span<const double> scores,
                              const CandidateSet &candidates);

enum class ThresholdDirection { kConventional, kLiteral };
std::string_view DirectionName(ThresholdDirection d);
ThresholdDirection ParseDirection(std::string_view name);

// `candidate_scores` holds the k candidate scores only; the decision's score
// vector gets `nil_score` at index 0.
LinkDecision SelectThreshold(std::span<const double> candidate_scores,
                             const CandidateSet &candidates, double theta,
                             ThresholdDirection direction =
                                 ThresholdDirection::kConventional,
                             double nil_score = 0.0);

// Renders the "{actual input}" block of the re-ranking prompts.
std::string RerankInput(std::span<const Token> query, const CandidateSet &candidates,
                        const KnowledgeBase &kb);
std::string BuildRerankPrompt(const PromptLibrary &prompts, std::span<const Token> query,
                              const CandidateSet &candidates, const KnowledgeBase &kb,
                              bool allow_nil);

inline constexpr size_t kLlmRerankDepth = 10;
inline constexpr std::string_view kNilAnswer = "The passage should be labeled as NIL.";

LinkDecision ParseRerankAnswer(const std::string &completion,
                               const CandidateSet &candidates, const KnowledgeBase &kb,
                               bool allow_nil);

LinkDecision LlmRerank(TextCompletionClient &client, const PromptLibrary &prompts,
                       std::span<const Token> query, const CandidateSet &candidates,
                       const KnowledgeBase &kb, bool allow_nil);

Json DecisionToJson(const LinkDecision &d);
LinkDecision DecisionFromJson(const Json &r);
std::string DumpDecisions(std::span<const LinkDecision> decisions,
                          const std::optional<Json> &manifest = std::nullopt);
std::vector<LinkDecision> LoadDecisions(const std::filesystem::path &path);

}  // namespace evlink

#endif  // EVLINK_RERANK_H_
