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

#include <string>

#include "catch_amalgamated.hpp"
#include "evlink/errors.h"
#include "evlink/io.h"
#include "evlink/kbstore.h"
#include "test_util.h"

namespace evlink {
namespace {

std::string Record(const std::string &id, const std::string &title, const std::string &desc) {
  return Json{{"id", id}, {"title", title}, {"description", desc}}.dump() + "\n";
}

std::string ErrorOf(const std::string &text) {
  try {
    ParseKb(text, "kb.jsonl");
  } catch (const DataError &e) {
    return e.what();
  }
  return {};
}

TEST_CASE("load_kb keeps records in file order", "[kbstore]") {
  testing::TempDir dir("kb");
  io::WriteFileAtomic(dir / "kb.jsonl", Record("E2", "Second", "b") + Record("E1", "First", "a"));
  KnowledgeBase kb = LoadKb(dir / "kb.jsonl");
  REQUIRE(kb.size() == 2);
  CHECK(kb[0].id == "E2");
  CHECK(kb[1].id == "E1");
  CHECK(kb.Position("E1") == 1u);
  CHECK(ParseKb(DumpKb(kb), "again").entries().size() == 2);
}

TEST_CASE("load_kb rejects bad records", "[kbstore]") {
  CHECK(ErrorOf(Record("E1", "a", "") + Record("E1", "b", "")).find("\"E1\"") !=
        std::string::npos);
  CHECK(ErrorOf(Record("E1", "a", "") + Record("E1", "b", "")).find("duplicate") !=
        std::string::npos);
  CHECK(ErrorOf(Record("NIL", "a", "")).find("reserved") != std::string::npos);
  CHECK(ErrorOf(Record("E1", "a", "") + "{broken\n").find("kb.jsonl:2") != std::string::npos);
  CHECK(ErrorOf(Record("E1", "", "")).find("empty title") != std::string::npos);
  CHECK(ErrorOf("{\"id\":\"E1\",\"title\":\"t\"}\n").find("description") != std::string::npos);
  CHECK_THROWS_AS(KnowledgeBase({{"", "t", ""}}), DataError);
}

TEST_CASE("get_entry lookups", "[kbstore]") {
  KnowledgeBase kb({{"E1", "One", ""}, {"E2", "Two", ""}});
  REQUIRE(GetEntry(kb, "E2") != nullptr);
  CHECK(GetEntry(kb, "E2")->title == "Two");
  CHECK(GetEntry(kb, "E9") == nullptr);
  CHECK(GetEntry(kb, "NIL") == nullptr);
}

TEST_CASE("candidate_text serialization and truncation", "[kbstore]") {
  KBEntry e{"E1", "WWII", "global war"};
  CHECK(CandidateText(e, 10) == TokenSeq{"WWII", "[TITLE_SEP]", "global", "war"});
  CHECK(CandidateText(e, 3) == TokenSeq{"WWII", "[TITLE_SEP]", "global"});
  CHECK(CandidateText({"E1", "WWII", ""}, 10) == TokenSeq{"WWII", "[TITLE_SEP]"});
}

TEST_CASE("candidate_text without the separator is a prefix of the text", "[kbstore]") {
  KBEntry e{"E1", "Battle of the Somme", "A battle of the First World War fought in 1916 ."};
  TokenSeq full = Tokenize(e.title);
  TokenSeq desc = Tokenize(e.description);
  full.insert(full.end(), desc.begin(), desc.end());
  for (size_t n = 1; n <= 20; ++n) {
    TokenSeq t = CandidateText(e, n);
    CHECK(t.size() <= n);
    TokenSeq stripped;
    for (const auto &tok : t) {
      if (tok != Markers::kTitleSep) stripped.push_back(tok);
    }
    REQUIRE(stripped.size() <= full.size());
    CHECK(std::equal(stripped.begin(), stripped.end(), full.begin()));
  }
}

TEST_CASE("Without drops ids and keeps order", "[kbstore]") {
  KnowledgeBase kb({{"E1", "a", ""}, {"E2", "b", ""}, {"E3", "c", ""}});
  KnowledgeBase pruned = kb.Without({"E2"});
  REQUIRE(pruned.size() == 2);
  CHECK(pruned[0].id == "E1");
  CHECK(pruned[1].id == "E3");
  CHECK(pruned.Find("E2") == nullptr);
}

}  // namespace
}  // namespace evlink
