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

#include <atomic>
#include <set>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "evlink/encoders.h"
#include "evlink/errors.h"
#include "evlink/io.h"
#include "evlink/llm.h"
#include "evlink/neggen.h"
#include "evlink/retrieval.h"
#include "evlink/templates.h"
#include "test_util.h"

namespace evlink {
namespace {

using testing::MakeQuery;
using testing::MakeTagged;

TaggedQuery Tagged(const std::string &id, std::string_view text, size_t m,
                   std::vector<Argument> args, std::string gold = "E1") {
  return MakeTagged(MakeQuery(id, text, m, m, std::move(gold)), std::move(args));
}

TEST_CASE("sample_filter examples", "[neggen]") {
  TaggedQuery kept = testing::InvasionQuery();
  TaggedQuery proper = Tagged("p", "Napoleon lost at Waterloo in 1815", 3,
                              {{{0, 0}, "Loser"}, {{5, 5}, "Time"}});
  TaggedQuery one = Tagged("o", "Germany invaded Poland", 1, {{{0, 0}, "Assailant"}});
  TaggedQuery numeric = Tagged("n", "the 1,200 protested the tax", 1,
                               {{{0, 0}, "X"}, {{4, 4}, "Y"}});
  std::vector<TaggedQuery> pool = {kept, proper, one, numeric};
  auto filtered = SampleFilter(pool);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered[0].base.query_id == "q1");
  CHECK(SampleFilter(filtered).size() == filtered.size());
  CHECK(IsNumericMention(numeric.base));
  CHECK(IsProperNounMention(proper.base));
}

TEST_CASE("proper-noun rule ignores sentence-initial capitals", "[neggen]") {
  CHECK_FALSE(IsProperNounMention(MakeQuery("a", "Invaded by night , the city fell", 0, 0)));
  CHECK_FALSE(IsProperNounMention(MakeQuery("a", "It rained . Riots followed", 3, 3)));
  CHECK(IsProperNounMention(MakeQuery("a", "the Boston Tea Party began", 1, 3)));
  CHECK_FALSE(IsProperNounMention(MakeQuery("a", "the Boston tea party began", 1, 3)));
  CHECK_FALSE(IsNumericMention(MakeQuery("a", "the war began", 1, 1)));
  CHECK(IsNumericMention(MakeQuery("a", "in 1941 it began", 1, 1)));
}

TEST_CASE("negative-generation prompts match the golden files", "[neggen][golden]") {
  Json fx = io::ReadJson(testing::TestDir() / "golden/prompt_fixture.json");
  TaggedQuery q = TaggedFromJson(fx["query"]);
  PromptLibrary lib = PromptLibrary::Default();
  std::string args = BuildNegGenPrompt(lib, q, Provenance::kArgumentAware);
  std::string plain = BuildNegGenPrompt(lib, q, Provenance::kNonArgumentAware);
  CHECK(args == io::ReadFile(testing::TestDir() / "golden/prompt_argument_aware.txt"));
  CHECK(plain == io::ReadFile(testing::TestDir() / "golden/prompt_plain.txt"));
  CHECK(args.find("<Victim> the Soviet Union </Victim>") != std::string::npos);
  CHECK(args.ends_with("This \"invaded\" event is of the type \"Attack\"."));
  CHECK(plain.find("<Victim>") == std::string::npos);
  CHECK(plain.find("Passage: Germany <mention> invaded </mention> the Soviet Union in June "
                   "1941 .") != std::string::npos);
  q.event_type = std::string(kUnknownEventType);
  CHECK_THROWS_AS(BuildNegGenPrompt(lib, q, Provenance::kArgumentAware), DataError);
  CHECK_NOTHROW(BuildNegGenPrompt(lib, q, Provenance::kNonArgumentAware));
}

std::string TwoStep(const std::string &passage) {
  return "Plan 1: swap.\nFollowing Plan 1, we can generate this passage after Step 1: " + passage +
         "\nPlan 2: keep.\nFollowing Plan 2, we can generate this passage after Step 2: " +
         passage + "\n";
}

TEST_CASE("parse_completion outcomes", "[neggen]") {
  const std::string original =
      "<Assailant> Germany </Assailant> <mention> invaded </mention> <Victim> Poland </Victim>";
  const std::string changed =
      "<Assailant> Ardenia </Assailant> <mention> invaded </mention> <Victim> Velmora </Victim>";
  ParsedCompletion ok = ParseCompletion(TwoStep(changed), Provenance::kArgumentAware, original);
  CHECK(ok.accepted);
  CHECK(ok.passage2 == changed);
  CHECK(ok.plan1 == "swap.");
  CHECK(ok.passage1 == changed);
  CHECK(ok.passage.arguments.size() == 2);

  std::string no_close =
      "<Assailant> Ardenia </Assailant> <mention> invaded <Victim> Velmora </Victim>";
  CHECK(ParseCompletion(TwoStep(no_close), Provenance::kArgumentAware, original).reason ==
        "mention tags removed");
  std::string unbalanced = "<Assailant> Ardenia <mention> invaded </mention> Velmora";
  CHECK(ParseCompletion(TwoStep(unbalanced), Provenance::kArgumentAware, original).reason ==
        "unbalanced role tags");
  CHECK(ParseCompletion(TwoStep(original), Provenance::kArgumentAware, original).reason ==
        "unchanged");
  CHECK(ParseCompletion("Sure! Here it is.", Provenance::kArgumentAware, original)
            .reason.rfind("malformed", 0) == 0);

  const std::string plain_orig = "Germany <mention> invaded </mention> Poland";
  ParsedCompletion p = ParseCompletion("New passage: Ardenia <mention> invaded </mention> Velmora",
                                       Provenance::kNonArgumentAware, plain_orig);
  CHECK(p.accepted);
  CHECK(ParseCompletion("New passage: " + plain_orig, Provenance::kNonArgumentAware, plain_orig)
            .reason == "unchanged");
  CHECK(ParseCompletion("New passage: Ardenia invaded Velmora", Provenance::kNonArgumentAware,
                        plain_orig)
            .reason == "mention tags removed");
}

struct Fixture {
  KnowledgeBase kb;
  std::vector<TaggedQuery> pool;
  HashingEncoder enc{32, 4};
  DenseIndex index;

  Fixture() {
    std::vector<KBEntry> entries;
    for (int i = 0; i < 12; ++i) {
      std::string id = "E" + std::to_string(i);
      entries.push_back({id, "Battle number " + std::to_string(i),
                         "Army " + std::to_string(i) + " fought army " + std::to_string(i + 1)});
    }
    kb = KnowledgeBase(entries);
    index = BuildIndex(kb, enc, 32);
    for (int i = 0; i < 8; ++i) {
      pool.push_back(Tagged("t" + std::to_string(i),
                            "the Northmen attacked Army" + std::to_string(i) + " in 1900", 2,
                            {{{0, 1}, "Attacker"}, {{3, 3}, "Target"}, {{5, 5}, "Time"}},
                            "E" + std::to_string(i)));
    }
    pool.push_back(Tagged("t-one", "Northmen attacked", 1, {{{0, 0}, "Attacker"}}));
  }
};

TEST_CASE("generate_negatives with a valid mock", "[neggen]") {
  Fixture fx;
  DenseRetriever retriever(fx.index, fx.enc, FormatStyle::kArguments, 32);
  ArgumentSwapClient client({"Ardenia", "Velmora", "Kostrel"}, 3);
  NegGenConfig cfg;
  cfg.count = 5;
  cfg.seed = 11;
  NegGenResult r = GenerateNegatives(fx.pool, retriever, client, PromptLibrary::Default(),
                                     Provenance::kArgumentAware, cfg);
  REQUIRE(r.negatives.size() == 5);
  CHECK(r.log.size() >= 5);
  std::set<std::string> origins;
  for (size_t i = 0; i < r.negatives.size(); ++i) {
    const auto &n = r.negatives[i];
    CHECK(n.query.base.gold == "NIL");
    CHECK(n.query.base.query_id == n.origin_query_id + "#neg");
    CHECK(n.paired_candidate_ids.size() == 10);
    CHECK(n.provenance == Provenance::kArgumentAware);
    CHECK(n.query.arguments.size() == 3);
    const TaggedQuery *origin = nullptr;
    for (const auto &q : fx.pool) {
      if (q.base.query_id == n.origin_query_id) origin = &q;
    }
    REQUIRE(origin != nullptr);
    CHECK(n.paired_candidate_ids == retriever.Retrieve(*origin, 10).Ids());
    CHECK(n.query.base.tokens != origin->base.tokens);
    if (i > 0) CHECK(r.negatives[i - 1].origin_query_id < n.origin_query_id);
    origins.insert(n.origin_query_id);
  }
  CHECK(origins.count("t-one") == 0);

  ArgumentSwapClient again_client({"Ardenia", "Velmora", "Kostrel"}, 3);
  NegGenConfig serial = cfg;
  serial.max_in_flight = 1;
  NegGenResult again = GenerateNegatives(fx.pool, retriever, again_client,
                                         PromptLibrary::Default(), Provenance::kArgumentAware,
                                         serial);
  CHECK(DumpNegatives(again.negatives) == DumpNegatives(r.negatives));

  std::vector<TaggedQuery> reversed(fx.pool.rbegin(), fx.pool.rend());
  NegGenResult shuffled = GenerateNegatives(reversed, retriever, again_client,
                                            PromptLibrary::Default(),
                                            Provenance::kArgumentAware, cfg);
  CHECK(DumpNegatives(shuffled.negatives) == DumpNegatives(r.negatives));
}

TEST_CASE("generate_negatives rejects tag-dropping completions", "[neggen]") {
  Fixture fx;
  DenseRetriever retriever(fx.index, fx.enc, FormatStyle::kArguments, 32);
  ScriptedClient dropper([](const std::string &) {
    return TwoStep("the Southmen attacked Army9 in 1901");
  });
  NegGenConfig cfg;
  cfg.count = 5;
  NegGenResult r = GenerateNegatives(fx.pool, retriever, dropper, PromptLibrary::Default(),
                                     Provenance::kArgumentAware, cfg);
  CHECK(r.negatives.empty());
  CHECK(r.log.size() == 8);
  for (const auto &rec : r.log) {
    CHECK_FALSE(rec.accepted);
    CHECK(rec.reason == "mention tags removed");
    CHECK(RecordToJson(rec)["status"] == "rejected");
  }
}

TEST_CASE("transport errors are retried, then logged", "[neggen]") {
  Fixture fx;
  DenseRetriever retriever(fx.index, fx.enc, FormatStyle::kArguments, 32);
  ArgumentSwapClient inner({"Ardenia", "Velmora"}, 1);
  std::atomic<int> calls{0};
  ScriptedClient flaky([&](const std::string &p) {
    if (++calls % 2 == 1) throw TransportError("timeout");
    return inner.Complete(p);
  });
  NegGenConfig cfg;
  cfg.count = 2;
  cfg.max_in_flight = 1;
  NegGenResult r = GenerateNegatives(fx.pool, retriever, flaky, PromptLibrary::Default(),
                                     Provenance::kArgumentAware, cfg);
  CHECK(r.negatives.size() == 2);
  CHECK(calls == 4);

  ScriptedClient dead([](const std::string &) -> std::string { throw TransportError("gone"); });
  cfg.max_attempts = 2;
  NegGenResult none = GenerateNegatives(fx.pool, retriever, dead, PromptLibrary::Default(),
                                        Provenance::kArgumentAware, cfg);
  CHECK(none.negatives.empty());
  REQUIRE_FALSE(none.log.empty());
  CHECK(none.log[0].reason.find("transport error after 2 attempts") != std::string::npos);
}

TEST_CASE("plain-style negatives can be retagged", "[neggen]") {
  Fixture fx;
  DenseRetriever retriever(fx.index, fx.enc, FormatStyle::kBlink, 32);
  ArgumentSwapClient client({"Ardenia", "Velmora"}, 2);
  RoleLexicon lex;
  lex.AddRole("ardenia", "Attacker");
  lex.AddRole("velmora", "Attacker");
  auto retagger = MakeRuleExtractor(lex);
  NegGenConfig cfg;
  cfg.count = 3;
  cfg.retagger = retagger.get();
  NegGenResult r = GenerateNegatives(fx.pool, retriever, client, PromptLibrary::Default(),
                                     Provenance::kNonArgumentAware, cfg);
  REQUIRE(r.negatives.size() == 3);
  for (const auto &n : r.negatives) {
    CHECK(n.provenance == Provenance::kNonArgumentAware);
    CHECK_FALSE(n.query.arguments.empty());
  }
}

TEST_CASE("kb pruning relabels exactly the pruned golds", "[neggen]") {
  std::vector<TaggedQuery> train;
  for (int i = 0; i < 30; ++i) {
    train.push_back(Tagged("q" + std::to_string(i), "a b c", 1, {},
                           "E" + std::to_string(i % 10)));
  }
  train.push_back(Tagged("nil", "a b c", 1, {}, "NIL"));
  PruningResult r = KbPruningNegatives(train, 0.1, 3);
  REQUIRE(r.pruned_labels.size() == 1);
  REQUIRE(r.queries.size() == train.size());
  std::vector<std::string> relabeled;
  for (size_t i = 0; i < train.size(); ++i) {
    bool pruned = train[i].base.gold == r.pruned_labels[0];
    CHECK(r.queries[i].base.gold == (pruned ? "NIL" : train[i].base.gold));
    if (pruned) relabeled.push_back(train[i].base.query_id);
  }
  CHECK(relabeled == r.relabeled_ids);
  CHECK(relabeled.size() == 3);
  CHECK(KbPruningNegatives(train, 0.1, 3).pruned_labels == r.pruned_labels);
  CHECK(KbPruningNegatives(train, 0.25, 3).pruned_labels.size() == 3);
  CHECK_THROWS_AS(KbPruningNegatives(train, 1.0, 3), std::invalid_argument);
}

TEST_CASE("negative records round trip", "[neggen]") {
  NegativeExample n;
  n.query = testing::InvasionQuery();
  n.query.base.gold = "NIL";
  n.origin_query_id = "q1";
  n.paired_candidate_ids = {"E1", "E2"};
  n.provenance = Provenance::kNonArgumentAware;
  NegativeExample back = NegativeFromJson(NegativeToJson(n));
  CHECK(back.query == n.query);
  CHECK(back.paired_candidate_ids == n.paired_candidate_ids);
  CHECK(back.provenance == Provenance::kNonArgumentAware);
  CHECK(NegativeToJson(n)["provenance"] == "non_argument_aware");
  CHECK(ParseProvenance("prune") == Provenance::kKbPruning);
  CHECK(ParseProvenance("argument_aware") == Provenance::kArgumentAware);
}

}  // namespace
}  // namespace evlink
