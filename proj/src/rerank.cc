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

#include "evlink/rerank.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <unordered_set>

#include "evlink/errors.h"
#include "evlink/templates.h"

namespace evlink {
namespace {

std::string LexicalKey(std::string_view token) {
  size_t b = 0, e = token.size();
  if (b < e && token[b] == '\\') ++b;
  while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
  return AsciiLower(token.substr(b, e - b));
}

}  // namespace

LexicalFeatures PairFeatures(std::span<const Token> query,
                             std::span<const Token> candidate) {
  std::unordered_set<std::string> vocab;
  for (const auto &t : candidate) {
    if (IsMarker(t)) continue;
    std::string key = LexicalKey(t);
    if (!key.empty()) vocab.insert(std::move(key));
  }
  std::array<int, kNumLexicalFeatures> hits{}, totals{};
  int label_depth = 0;
  bool in_mention = false;
  for (const auto &t : query) {
    if (t == Markers::kMentionStart) {
      in_mention = true;
    } else if (t == Markers::kMentionEnd) {
      in_mention = false;
    } else if (Markers::IsLabelStart(t)) {
      ++label_depth;
    } else if (Markers::IsLabelEnd(t)) {
      label_depth = std::max(0, label_depth - 1);
    } else if (!IsMarker(t)) {
      std::string key = LexicalKey(t);
      if (key.empty()) continue;
      const size_t group = label_depth > 0 ? 0 : in_mention ? 1 : 2;
      ++totals[group];
      if (vocab.count(key) > 0) ++hits[group];
    }
  }
  LexicalFeatures out{};
  for (size_t g = 0; g < kNumLexicalFeatures; ++g) {
    out[g] = totals[g] == 0 ? 0.0 : static_cast<double>(hits[g]) / totals[g];
  }
  return out;
}

TokenSeq PairTokens(std::span<const Token> query, std::span<const Token> candidate) {
  TokenSeq out(query.begin(), query.end());
  out.emplace_back(Markers::kSep);
  out.insert(out.end(), candidate.begin(), candidate.end());
  return out;
}

CrossScorer::CrossScorer(TinyEncoder query_tower, TinyEncoder candidate_tower,
                         uint64_t seed, Options options)
    : query_tower_(std::move(query_tower)),
      candidate_tower_(std::move(candidate_tower)),
      options_(options) {
  if (query_tower_.dim() != candidate_tower_.dim()) {
    throw std::invalid_argument("cross scorer towers differ in dimension");
  }
  if (options_.max_len < 3) throw std::invalid_argument("cross scorer max_len must be >= 3");
  const size_t d = dim();
  w_int_.assign(d, 1.0);
  w_cand_.assign(d, 0.0);
  alpha_.assign(kNumLexicalFeatures, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  nil_.resize(d);
  for (double &x : nil_) x = unit(rng);
}

CrossScorer CrossScorer::FromBiEncoder(const BiEncoder &bi, uint64_t seed, Options options) {
  auto *q = dynamic_cast<const TinyEncoder *>(bi.query.get());
  auto *c = dynamic_cast<const TinyEncoder *>(bi.candidate.get());
  if (q == nullptr || c == nullptr) {
    throw UsageError("the cross scorer can only start from a tiny bi-encoder");
  }
  return CrossScorer(*q, *c, seed, options);
}

std::vector<double> CrossScorer::ScoreAll(std::span<const Token> query,
                                          std::span<const TokenSeq> candidates) const {
  const size_t d = dim();
  const Embedding h = query_tower_.Encode(query);
  std::vector<double> scores;
  scores.reserve(candidates.size() + 1);
  auto score = [&](std::span<const double> v, const LexicalFeatures &m) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += w_int_[j] * h[j] * v[j] + w_cand_[j] * v[j];
    for (size_t f = 0; f < kNumLexicalFeatures; ++f) s += alpha_[f] * m[f];
    return s;
  };
  scores.push_back(score(nil_, LexicalFeatures{}));
  for (const auto &c : candidates) {
    scores.push_back(score(candidate_tower_.Encode(c), PairFeatures(query, c)));
  }
  return scores;
}

double CrossScorer::Loss(std::span<const Token> query, std::span<const TokenSeq> candidates,
                         size_t target, GradBuffer *grads) const {
  const size_t d = dim();
  const size_t n = candidates.size() + 1;
  if (target >= n) throw std::invalid_argument("target index out of range");
  TinyEncoder::Cache qcache;
  const Embedding &h = query_tower_.Forward(query, &qcache);
  std::vector<TinyEncoder::Cache> ccache(candidates.size());
  std::vector<LexicalFeatures> feats(n);
  std::vector<const double *> vs(n);
  vs[0] = nil_.data();
  for (size_t i = 1; i < n; ++i) {
    vs[i] = candidate_tower_.Forward(candidates[i - 1], &ccache[i - 1]).data();
    feats[i] = PairFeatures(query, candidates[i - 1]);
  }
  std::vector<double> logits(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) s += w_int_[j] * h[j] * vs[i][j] + w_cand_[j] * vs[i][j];
    for (size_t f = 0; f < kNumLexicalFeatures; ++f) s += alpha_[f] * feats[i][f];
    logits[i] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double loss = std::log(z) + mx - logits[target];
  if (grads == nullptr) return loss;

  constexpr size_t kT = TinyEncoder::kNumBlocks;
  auto &g_int = (*grads)[2 * kT];
  auto &g_cand = (*grads)[2 * kT + 1];
  auto &g_alpha = (*grads)[2 * kT + 2];
  auto &g_nil = (*grads)[2 * kT + 3];
  std::vector<double> dh(d, 0.0), dv(d);
  for (size_t i = 0; i < n; ++i) {
    const double g = std::exp(logits[i] - mx) / z - (i == target ? 1.0 : 0.0);
    const double *v = vs[i];
    for (size_t j = 0; j < d; ++j) {
      g_int[j] += g * h[j] * v[j];
      g_cand[j] += g * v[j];
      dh[j] += g * w_int_[j] * v[j];
      dv[j] = g * (w_int_[j] * h[j] + w_cand_[j]);
    }
    for (size_t f = 0; f < kNumLexicalFeatures; ++f) g_alpha[f] += g * feats[i][f];
    if (i == 0) {
      for (size_t j = 0; j < d; ++j) g_nil[j] += dv[j];
    } else {
      candidate_tower_.Backward(ccache[i - 1], dv, *grads, kT);
    }
  }
  query_tower_.Backward(qcache, dh, *grads, 0);
  return loss;
}

std::vector<ParamBlock> CrossScorer::Blocks() {
  std::vector<ParamBlock> out;
  for (auto &b : query_tower_.Blocks()) out.push_back({"query." + b.name, b.values});
  for (auto &b : candidate_tower_.Blocks()) out.push_back({"candidate." + b.name, b.values});
  out.push_back({"interaction", w_int_});
  out.push_back({"candidate_weight", w_cand_});
  out.push_back({"feature_weight", alpha_});
  out.push_back({"nil_embedding", nil_});
  return out;
}

Json CrossScorer::ToJson() const {
  return {{"format", "evlink-cross-scorer"},
          {"version", 1},
          {"max_len", options_.max_len},
          {"query_tower", query_tower_.ToJson()},
          {"candidate_tower", candidate_tower_.ToJson()},
          {"interaction", w_int_},
          {"candidate_weight", w_cand_},
          {"feature_weight", alpha_},
          {"nil_embedding", nil_}};
}

CrossScorer CrossScorer::FromJson(const Json &doc) {
  CrossScorer s;
  try {
    if (doc.at("format") != "evlink-cross-scorer") throw DataError("not a cross scorer checkpoint");
    s.options_.max_len = doc.at("max_len").get<size_t>();
    s.options_.trainable = false;
    s.query_tower_ = TinyEncoder::FromJson(doc.at("query_tower"));
    s.candidate_tower_ = TinyEncoder::FromJson(doc.at("candidate_tower"));
    s.w_int_ = doc.at("interaction").get<std::vector<double>>();
    s.w_cand_ = doc.at("candidate_weight").get<std::vector<double>>();
    s.alpha_ = doc.at("feature_weight").get<std::vector<double>>();
    s.nil_ = doc.at("nil_embedding").get<std::vector<double>>();
  } catch (const Json::exception &e) {
    throw DataError(std::string("malformed cross scorer checkpoint: ") + e.what());
  }
  const size_t d = s.query_tower_.dim();
  if (s.candidate_tower_.dim() != d || s.w_int_.size() != d || s.w_cand_.size() != d ||
      s.nil_.size() != d || s.alpha_.size() != kNumLexicalFeatures) {
    throw DataError("cross scorer parameter shapes disagree");
  }
  return s;
}

std::string CrossScorer::Fingerprint() const { return io::Sha256Hex(ToJson().dump()); }

std::vector<TokenSeq> CandidateTexts(const CrossScorer &scorer, std::span<const Token> query,
                                     const CandidateSet &candidates, const KnowledgeBase &kb) {
  const size_t used = query.size() + 1;
  const size_t budget = scorer.max_len() > used ? scorer.max_len() - used : 1;
  std::vector<TokenSeq> texts;
  texts.reserve(candidates.size());
  for (const auto &c : candidates.candidates) {
    const KBEntry *e = kb.Find(c.id);
    if (e == nullptr) {
      throw DataError("query \"" + candidates.query_id + "\": candidate \"" + c.id +
                      "\" is not in the knowledge base");
    }
    texts.push_back(CandidateText(*e, budget));
  }
  return texts;
}

std::vector<double> ScorePairs(const CrossScorer &scorer, std::span<const Token> query,
                               const CandidateSet &candidates, const KnowledgeBase &kb) {
  return scorer.ScoreAll(query, CandidateTexts(scorer, query, candidates, kb));
}

std::string_view RuleName(DecisionRule rule) {
  switch (rule) {
    case DecisionRule::kLearnedNil: return "learned_nil";
    case DecisionRule::kThreshold: return "threshold";
    case DecisionRule::kLlm: return "llm";
  }
  return "learned_nil";
}

DecisionRule ParseRule(std::string_view name) {
  if (name == "learned_nil" || name == "learned") return DecisionRule::kLearnedNil;
  if (name == "threshold") return DecisionRule::kThreshold;
  if (name == "llm") return DecisionRule::kLlm;
  throw UsageError("unknown decision rule \"" + std::string(name) + "\"");
}

LinkDecision SelectLearnedNil(std::span<const double> scores, const CandidateSet &candidates) {
  if (scores.size() != candidates.size() + 1) {
    throw std::invalid_argument("score vector must have k+1 entries");
  }
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  LinkDecision d;
  d.query_id = candidates.query_id;
  d.rule = DecisionRule::kLearnedNil;
  d.scores.assign(scores.begin(), scores.end());
  d.prediction = best == 0 ? std::string(kNilLabel) : candidates.candidates[best - 1].id;
  return d;
}

std::string_view DirectionName(ThresholdDirection d) {
  return d == ThresholdDirection::kLiteral ? "literal" : "conventional";
}

ThresholdDirection ParseDirection(std::string_view name) {
  if (name == "conventional") return ThresholdDirection::kConventional;
  if (name == "literal") return ThresholdDirection::kLiteral;
  throw UsageError("unknown threshold direction \"" + std::string(name) + "\"");
}

LinkDecision SelectThreshold(std::span<const double> candidate_scores,
                             const CandidateSet &candidates, double theta,
                             ThresholdDirection direction, double nil_score) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must be in [0, 1]");
  if (candidate_scores.size() != candidates.size() || candidates.size() == 0) {
    throw std::invalid_argument("threshold rule needs one score per candidate");
  }
  size_t best = 0;
  for (size_t i = 1; i < candidate_scores.size(); ++i) {
    if (candidate_scores[i] > candidate_scores[best]) best = i;
  }
  const double mx = candidate_scores[best];
  double z = 0.0;
  for (double s : candidate_scores) z += std::exp(s - mx);
  const double p = 1.0 / z;
  const bool keep = direction == ThresholdDirection::kConventional ? p >= theta : p < theta;

  LinkDecision d;
  d.query_id = candidates.query_id;
  d.rule = DecisionRule::kThreshold;
  d.scores.push_back(nil_score);
  d.scores.insert(d.scores.end(), candidate_scores.begin(), candidate_scores.end());
  d.prediction = keep ? candidates.candidates[best].id : std::string(kNilLabel);
  return d;
}

namespace {

std::string OneLine(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
  return Trim(out);
}

std::string PassageFromFormatted(std::span<const Token> query) {
  std::string out;
  for (const auto &t : query) {
    if (t == Markers::kSep) break;
    std::string piece;
    if (t == Markers::kMentionStart) {
      piece = "<mention>";
    } else if (t == Markers::kMentionEnd) {
      piece = "</mention>";
    } else if (IsMarker(t)) {
      continue;
    } else {
      piece = t.size() > 1 && t[0] == '\\' && IsMarker(std::string_view(t).substr(1))
                  ? t.substr(1)
                  : t;
    }
    if (!out.empty()) out.push_back(' ');
    out += piece;
  }
  return out;
}

}  // namespace

std::string RerankInput(std::span<const Token> query, const CandidateSet &candidates,
                        const KnowledgeBase &kb) {
  std::string out;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const KBEntry *e = kb.Find(candidates.candidates[i].id);
    if (e == nullptr) {
      throw DataError("candidate \"" + candidates.candidates[i].id +
                      "\" is not in the knowledge base");
    }
    out += "Document " + std::to_string(i + 1) + ": " + OneLine(e->title) + "\n" +
           OneLine(e->description) + "\n";
  }
  out += "Short passage containing an event: " + PassageFromFormatted(query);
  return out;
}

std::string BuildRerankPrompt(const PromptLibrary &prompts, std::span<const Token> query,
                              const CandidateSet &candidates, const KnowledgeBase &kb,
                              bool allow_nil) {
  if (candidates.size() != kLlmRerankDepth) {
    throw std::invalid_argument("the re-ranking prompts expect exactly 10 candidates");
  }
  const std::string tmpl = prompts.Get(allow_nil ? "rerank_nil" : "rerank_in_kb");
  return FillTemplate(tmpl, {{"actual input", RerankInput(query, candidates, kb)}});
}

LinkDecision ParseRerankAnswer(const std::string &completion, const CandidateSet &candidates,
                               const KnowledgeBase &kb, bool allow_nil) {
  const size_t k = candidates.size();
  LinkDecision d;
  d.query_id = candidates.query_id;
  d.rule = DecisionRule::kLlm;
  d.scores.assign(k + 1, 0.0);
  d.prediction = std::string(kNilLabel);

  if (allow_nil && completion.find("labeled as NIL") != std::string::npos) {
    d.scores[0] = 1.0;
    return d;
  }
  std::vector<std::string> titles;
  size_t pos = 0;
  while (pos < completion.size()) {
    size_t eol = completion.find('\n', pos);
    std::string line = Trim(std::string_view(completion).substr(
        pos, eol == std::string::npos ? std::string::npos : eol - pos));
    pos = eol == std::string::npos ? completion.size() : eol + 1;
    if (line.rfind("Document ", 0) != 0) continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    titles.push_back(Trim(std::string_view(line).substr(colon + 1)));
  }
  if (titles.empty()) {
    d.annotation = "parse failure: no ranked documents in the answer";
    return d;
  }
  auto find_title = [&](const std::string &title) -> std::optional<size_t> {
    for (size_t i = 0; i < k; ++i) {
      const KBEntry *e = kb.Find(candidates.candidates[i].id);
      if (e != nullptr && OneLine(e->title) == title) return i;
    }
    return std::nullopt;
  };
  auto top = find_title(titles.front());
  if (!top) {
    d.annotation = "parse failure: unknown title \"" + titles.front() + "\"";
    return d;
  }
  // Rank-derived pseudo scores: k for the first answer, k-1 for the next, ...
  std::vector<bool> seen(k, false);
  double next = static_cast<double>(k);
  for (const auto &t : titles) {
    auto i = find_title(t);
    if (!i || seen[*i]) continue;
    seen[*i] = true;
    d.scores[*i + 1] = next / static_cast<double>(k);
    next -= 1.0;
  }
  d.prediction = candidates.candidates[*top].id;
  return d;
}

LinkDecision LlmRerank(TextCompletionClient &client, const PromptLibrary &prompts,
                       std::span<const Token> query, const CandidateSet &candidates,
                       const KnowledgeBase &kb, bool allow_nil) {
  const std::string prompt = BuildRerankPrompt(prompts, query, candidates, kb, allow_nil);
  return ParseRerankAnswer(client.Complete(prompt), candidates, kb, allow_nil);
}

Json DecisionToJson(const LinkDecision &d) {
  Json r = {{"query_id", d.query_id},
            {"prediction", d.prediction},
            {"rule", RuleName(d.rule)},
            {"scores", d.scores}};
  if (!d.annotation.empty()) r["annotation"] = d.annotation;
  return r;
}

LinkDecision DecisionFromJson(const Json &r) {
  LinkDecision d;
  try {
    d.query_id = r.at("query_id").get<std::string>();
    d.prediction = r.at("prediction").get<std::string>();
    d.rule = ParseRule(r.at("rule").get<std::string>());
    d.scores = r.at("scores").get<std::vector<double>>();
    if (r.contains("annotation")) d.annotation = r.at("annotation").get<std::string>();
  } catch (const Json::exception &e) {
    throw DataError(std::string("malformed decision: ") + e.what());
  } catch (const UsageError &e) {
    throw DataError(e.what());
  }
  return d;
}

std::string DumpDecisions(std::span<const LinkDecision> decisions,
                          const std::optional<Json> &manifest) {
  std::vector<Json> records;
  records.reserve(decisions.size());
  for (const auto &d : decisions) records.push_back(DecisionToJson(d));
  return io::DumpJsonl(records, manifest);
}

std::vector<LinkDecision> LoadDecisions(const std::filesystem::path &path) {
  io::JsonlDocument doc = io::ReadJsonl(path);
  std::vector<LinkDecision> out;
  for (size_t i = 0; i < doc.records.size(); ++i) {
    try {
      out.push_back(DecisionFromJson(doc.records[i]));
    } catch (const DataError &e) {
      throw DataError(path.string() + ":" + std::to_string(doc.lines[i]) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace evlink
