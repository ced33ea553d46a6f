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

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "evlink/errors.h"
#include "evlink/formatting.h"
#include "evlink/io.h"
#include "evlink/llm.h"
#include "evlink/rerank.h"
#include "evlink/templates.h"
#include "gradcheck.h"
#include "test_util.h"

namespace evlink {
namespace {

using Catch::Matchers::WithinAbs;

CandidateSet Cands(std::vector<std::string> ids) {
  CandidateSet c;
  c.query_id = "q";
  double s = 1.0;
  for (auto &id : ids) c.candidates.push_back({std::move(id), s -= 0.1});
  return c;
}

KnowledgeBase SmallKb() {
  return KnowledgeBase({{"E1", "Invasion of the Soviet Union", "Germany invaded in 1941"},
                        {"E2", "Invasion of Poland", "Germany invaded Poland in 1939"},
                        {"E3", "Winter War", "The Soviet Union attacked Finland"}});
}

CrossScorer MakeScorer(uint64_t seed, size_t max_len = 64) {
  KnowledgeBase kb = SmallKb();
  std::vector<TokenSeq> corpus;
  for (const auto &e : kb) corpus.push_back(CandidateText(e, 64));
  corpus.push_back(FormatArguments(testing::InvasionQuery(), 64));
  auto vocab = BuildVocabulary(corpus);
  return CrossScorer(TinyEncoder(vocab, 6, seed), TinyEncoder(vocab, 6, seed + 1), seed + 2,
                     {max_len, true});
}

void Perturb(CrossScorer &scorer, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  for (auto &b : scorer.Blocks()) {
    for (double &x : b.values) x += g(rng);
  }
}

TEST_CASE("pair features count lexical overlap per group", "[rerank]") {
  TokenSeq q = FormatArguments(testing::InvasionQuery(), 64);
  TokenSeq c = {"Soviet", "[TITLE_SEP]", "germany,", "Invaded"};
  LexicalFeatures f = PairFeatures(q, c);
  CHECK_THAT(f[0], WithinAbs(2.0 / 4.0, 1e-12));
  CHECK_THAT(f[1], WithinAbs(1.0, 1e-12));
  CHECK(f[2] == 0.0);
  CHECK(PairTokens(TokenSeq{"a"}, TokenSeq{"b"}) == TokenSeq{"a", "[SEP]", "b"});
}

TEST_CASE("score_pairs shape, permutation and determinism", "[rerank]") {
  CrossScorer scorer = MakeScorer(1);
  Perturb(scorer, 9);
  KnowledgeBase kb = SmallKb();
  TokenSeq q = FormatArguments(testing::InvasionQuery(), 64);
  auto s = ScorePairs(scorer, q, Cands({"E1", "E2", "E3"}), kb);
  REQUIRE(s.size() == 4);
  CHECK(ScorePairs(scorer, q, Cands({"E1", "E2", "E3"}), kb) == s);
  auto p = ScorePairs(scorer, q, Cands({"E3", "E1", "E2"}), kb);
  CHECK(p[0] == s[0]);
  CHECK(p[1] == s[3]);
  CHECK(p[2] == s[1]);
  CHECK(p[3] == s[2]);
  CHECK(ScorePairs(scorer, q, Cands({"E2"}), kb)[0] == s[0]);
  CHECK_THROWS_AS(ScorePairs(scorer, q, Cands({"E9"}), kb), DataError);
}

TEST_CASE("candidate texts fill the remaining budget", "[rerank]") {
  CrossScorer scorer = MakeScorer(1, 12);
  TokenSeq q = FormatArguments(testing::InvasionQuery(), 64);
  REQUIRE(q.size() == 11);
  auto texts = CandidateTexts(scorer, q, Cands({"E1"}), SmallKb());
  CHECK(texts[0].size() == 1);
  CrossScorer wide = MakeScorer(1, 20);
  CHECK(CandidateTexts(wide, q, Cands({"E1"}), SmallKb())[0].size() == 8);
}

TEST_CASE("cross scorer loss gradient matches finite differences", "[rerank][gradcheck]") {
  CrossScorer scorer = MakeScorer(4);
  Perturb(scorer, 17);
  KnowledgeBase kb = SmallKb();
  TokenSeq q = FormatArguments(testing::InvasionQuery(), 64);
  auto texts = CandidateTexts(scorer, q, Cands({"E1", "E2", "E3"}), kb);
  for (size_t target : {0u, 2u}) {
    auto blocks = scorer.Blocks();
    REQUIRE(blocks.size() == CrossScorer::kNumBlocks);
    GradBuffer grads = ZeroGrads(blocks);
    double loss = scorer.Loss(q, texts, target, &grads);
    CHECK(loss > 0.0);
    auto result = testing::CheckGradients(
        blocks, grads, [&] { return scorer.Loss(q, texts, target, nullptr); });
    INFO(result.worst);
    CHECK(result.max_relative_error < 1e-4);
  }
}

TEST_CASE("loss is the cross-entropy of ScoreAll", "[rerank]") {
  CrossScorer scorer = MakeScorer(2);
  Perturb(scorer, 3);
  TokenSeq q = FormatArguments(testing::InvasionQuery(), 64);
  auto texts = CandidateTexts(scorer, q, Cands({"E1", "E2"}), SmallKb());
  auto s = scorer.ScoreAll(q, texts);
  double z = 0.0;
  for (double x : s) z += std::exp(x);
  CHECK_THAT(scorer.Loss(q, texts, 1, nullptr), WithinAbs(std::log(z) - s[1], 1e-12));
  CHECK_THROWS_AS(scorer.Loss(q, texts, 3, nullptr), std::invalid_argument);
}

TEST_CASE("cross scorer checkpoints round trip", "[rerank]") {
  CrossScorer scorer = MakeScorer(5);
  Perturb(scorer, 5);
  CrossScorer back = CrossScorer::FromJson(scorer.ToJson());
  TokenSeq q = FormatArguments(testing::InvasionQuery(), 64);
  auto texts = CandidateTexts(scorer, q, Cands({"E1", "E2"}), SmallKb());
  CHECK(back.ScoreAll(q, texts) == scorer.ScoreAll(q, texts));
  CHECK(back.Fingerprint() == scorer.Fingerprint());
  CHECK(back.nil_embedding() == scorer.nil_embedding());
  CHECK_THROWS_AS(CrossScorer::FromJson(Json{{"format", "other"}}), DataError);
}

TEST_CASE("select_learned_nil examples", "[rerank]") {
  CandidateSet c = Cands({"E1", "E2", "E3"});
  CHECK(SelectLearnedNil(std::vector<double>{0.9, 0.2, 0.1, 0.3}, c).prediction == "NIL");
  CHECK(SelectLearnedNil(std::vector<double>{0.1, 0.2, 0.8, 0.3}, c).prediction == "E2");
  CHECK(SelectLearnedNil(std::vector<double>{0.5, 0.5, 0.2, 0.1}, c).prediction == "NIL");
  CHECK(SelectLearnedNil(std::vector<double>{0.1, 0.7, 0.7, 0.1}, c).prediction == "E1");
  CHECK_THROWS_AS(SelectLearnedNil(std::vector<double>{0.1}, c), std::invalid_argument);
}

TEST_CASE("select_learned_nil invariances", "[rerank][property]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> ids = {"A", "B", "C", "D", "E"};
    std::vector<double> scores(6);
    for (double &s : scores) s = u(rng);
    std::string base = SelectLearnedNil(scores, Cands(ids)).prediction;
    std::vector<double> shifted = scores;
    for (double &s : shifted) s += 3.25;
    CHECK(SelectLearnedNil(shifted, Cands(ids)).prediction == base);
    std::vector<size_t> perm = {0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> pids;
    std::vector<double> pscores = {scores[0]};
    for (size_t i : perm) {
      pids.push_back(ids[i]);
      pscores.push_back(scores[i + 1]);
    }
    CHECK(SelectLearnedNil(pscores, Cands(pids)).prediction == base);
  }
}

TEST_CASE("select_threshold examples", "[rerank]") {
  CandidateSet two = Cands({"E1", "E2"});
  LinkDecision tie = SelectThreshold(std::vector<double>{1.0, 1.0}, two, 0.5);
  CHECK(tie.prediction == "E1");
  REQUIRE(tie.scores.size() == 3);
  CHECK(tie.scores[0] == 0.0);
  // softmax max of 0.9 between two candidates
  std::vector<double> high = {std::log(9.0), 0.0};
  CHECK(SelectThreshold(high, two, 0.5).prediction == "E1");
  CHECK(SelectThreshold(high, two, 0.5, ThresholdDirection::kLiteral).prediction == "NIL");
  CandidateSet four = Cands({"E1", "E2", "E3", "E4"});
  std::vector<double> low = {std::log(1.2), 0.0, 0.0, 0.0};
  CHECK(SelectThreshold(low, four, 0.5).prediction == "NIL");
  CHECK(SelectThreshold(low, four, 0.5, ThresholdDirection::kLiteral).prediction == "E1");
  CHECK_THROWS_AS(SelectThreshold(low, four, 1.5), std::invalid_argument);
}

TEST_CASE("select_threshold extremes", "[rerank][property]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    size_t k = 1 + rng() % 6;
    std::vector<std::string> ids;
    std::vector<double> s(k);
    for (size_t i = 0; i < k; ++i) {
      ids.push_back("E" + std::to_string(i));
      s[i] = u(rng);
    }
    CHECK_FALSE(SelectThreshold(s, Cands(ids), 0.0).IsNil());
    CHECK(SelectThreshold(s, Cands(ids), 1.0).IsNil() == (k > 1));
  }
}

CandidateSet TenFromFixture(const Json &fx) {
  CandidateSet c;
  c.query_id = "p1";
  for (const auto &id : fx["candidates"]) c.candidates.push_back({id, 0.0});
  return c;
}

KnowledgeBase KbFromFixture(const Json &fx) {
  std::vector<KBEntry> entries;
  for (const auto &e : fx["kb"]) entries.push_back({e["id"], e["title"], e["description"]});
  return KnowledgeBase(entries);
}

TEST_CASE("rerank prompts match the golden files", "[rerank][golden]") {
  Json fx = io::ReadJson(testing::TestDir() / "golden/prompt_fixture.json");
  TaggedQuery q = TaggedFromJson(fx["query"]);
  KnowledgeBase kb = KbFromFixture(fx);
  CandidateSet c = TenFromFixture(fx);
  PromptLibrary lib = PromptLibrary::Default();
  TokenSeq formatted = FormatArguments(q, 256);
  CHECK(BuildRerankPrompt(lib, formatted, c, kb, false) ==
        io::ReadFile(testing::TestDir() / "golden/prompt_rerank_in_kb.txt"));
  CHECK(BuildRerankPrompt(lib, formatted, c, kb, true) ==
        io::ReadFile(testing::TestDir() / "golden/prompt_rerank_nil.txt"));
  CHECK(BuildRerankPrompt(lib, FormatBlink(q.base, 256), c, kb, true) ==
        io::ReadFile(testing::TestDir() / "golden/prompt_rerank_nil.txt"));
  c.candidates.pop_back();
  CHECK_THROWS_AS(BuildRerankPrompt(lib, formatted, c, kb, false), std::invalid_argument);
}

TEST_CASE("llm rerank decisions", "[rerank]") {
  Json fx = io::ReadJson(testing::TestDir() / "golden/prompt_fixture.json");
  TaggedQuery q = TaggedFromJson(fx["query"]);
  KnowledgeBase kb = KbFromFixture(fx);
  CandidateSet c = TenFromFixture(fx);
  PromptLibrary lib = PromptLibrary::Default();
  TokenSeq formatted = FormatArguments(q, 256);

  ScriptedClient reverse([](const std::string &prompt) {
    std::string echoed = EchoRerankClient().Complete(prompt);
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < echoed.size()) {
      size_t eol = echoed.find('\n', pos);
      lines.push_back(echoed.substr(pos, eol - pos));
      pos = eol + 1;
    }
    std::string out;
    for (size_t i = lines.size(); i-- > 0;) {
      out += "Document d" + std::to_string(lines.size() - i) + ": " +
             lines[i].substr(lines[i].find(": ") + 2) + "\n";
    }
    return out;
  });
  LinkDecision last = LlmRerank(reverse, lib, formatted, c, kb, false);
  CHECK(last.prediction == c.candidates.back().id);
  CHECK(last.rule == DecisionRule::kLlm);
  REQUIRE(last.scores.size() == 11);
  CHECK(last.scores[10] == 1.0);
  CHECK(last.scores[0] == 0.0);

  EchoRerankClient echo;
  CHECK(LlmRerank(echo, lib, formatted, c, kb, true).prediction == "E01");

  ScriptedClient nil([](const std::string &) { return std::string(kNilAnswer); });
  LinkDecision n = LlmRerank(nil, lib, formatted, c, kb, true);
  CHECK(n.IsNil());
  CHECK(n.annotation.empty());

  ScriptedClient stranger(
      [](const std::string &) { return std::string("Document d1: Battle of Hastings\n"); });
  LinkDecision f = LlmRerank(stranger, lib, formatted, c, kb, true);
  CHECK(f.IsNil());
  CHECK(f.annotation.rfind("parse failure", 0) == 0);

  ScriptedClient empty([](const std::string &) { return std::string("no idea"); });
  CHECK(LlmRerank(empty, lib, formatted, c, kb, false).annotation.rfind("parse failure", 0) == 0);

  ScriptedClient down([](const std::string &) -> std::string { throw TransportError("down"); });
  CHECK_THROWS_AS(LlmRerank(down, lib, formatted, c, kb, false), TransportError);
}

TEST_CASE("decision records round trip", "[rerank]") {
  LinkDecision d{"q", "E2", DecisionRule::kThreshold, {0.0, 0.5, 0.25}, "note"};
  LinkDecision back = DecisionFromJson(DecisionToJson(d));
  CHECK(back.query_id == "q");
  CHECK(back.prediction == "E2");
  CHECK(back.rule == DecisionRule::kThreshold);
  CHECK(back.scores == d.scores);
  CHECK(back.annotation == "note");
  CHECK(ParseRule("learned") == DecisionRule::kLearnedNil);
  CHECK_THROWS_AS(ParseRule("vote"), UsageError);
  CHECK(ParseDirection("literal") == ThresholdDirection::kLiteral);
}

}  // namespace
}  // namespace evlink
