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

#include "evlink/toydata.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace evlink {
namespace {

struct EventKind {
  const char *type;
  const char *role_a;
  const char *role_b;
  const char *title;        // {P} {Y}
  const char *description;  // {A} {B} {P} {Y}
  std::array<const char *, 5> queries;
  std::array<const char *, 5> triggers;  // mention of each query
  std::array<Pos, 5> pos;
};

constexpr Pos V = Pos::kVerb;
constexpr Pos N = Pos::kNoun;

const std::array<EventKind, 4> kKinds = {{
    {"Battle", "Combatant", "Combatant", "Battle of {P}",
     "The Battle of {P} was fought in {Y} between the {A} and the {B} . The {A} attacked "
     "{P} and the {B} defended it .",
     {"In {Y} , the {A} attacked the {B} at {P} .",
      "The {B} fought the {A} outside {P} during {Y} .",
      "The battle of {Y} saw the {A} overwhelm the {B} near {P} .",
      "Reports of the siege at {P} describe how the {A} surrounded the {B} .",
      "Both the {A} and the {B} clashed repeatedly around {P} in {Y} ."},
     {"attacked", "fought", "battle", "siege", "clashed"},
     {V, V, N, N, V}},
    {"Election", "Candidate", "Candidate", "{Y} {P} election",
     "The {Y} {P} election was won by {A} , who defeated {B} in the race for governor of "
     "{P} .",
     {"{A} was elected in {P} in {Y} after defeating {B} .",
      "The election of {Y} in {P} ended with {B} conceding to {A} .",
      "Voters in {P} chose {A} over {B} in {Y} .",
      "During the {Y} campaign , {A} and {B} toured {P} before the vote .",
      "In {Y} , {A} defeated {B} to govern {P} ."},
     {"elected", "election", "chose", "vote", "defeated"},
     {V, N, V, N, V}},
    {"Treaty", "Signatory", "Signatory", "Treaty of {P}",
     "The Treaty of {P} was signed in {Y} by the {A} and the {B} , ending years of "
     "rivalry .",
     {"The {A} and the {B} signed an accord at {P} in {Y} .",
      "The treaty agreed at {P} in {Y} bound the {A} to the {B} .",
      "In {Y} , envoys of the {A} negotiated peace with the {B} in {P} .",
      "Under the pact of {Y} , the {B} ceded land near {P} to the {A} .",
      "Delegates from the {A} ratified terms with the {B} at {P} ."},
     {"signed", "treaty", "negotiated", "pact", "ratified"},
     {V, N, V, N, V}},
    {"Protest", "Protester", "Target", "{Y} {P} protest",
     "In {Y} , {A} in {P} protested against the {B} over wages and working hours .",
     {"In {Y} , {A} protested outside the offices of the {B} in {P} .",
      "The protest by {A} against the {B} paralysed {P} in {Y} .",
      "{A} marched through {P} in {Y} to oppose the {B} .",
      "A strike by {A} in {P} shut down the {B} for weeks .",
      "Thousands of {A} rallied in {P} against the {B} during {Y} ."},
     {"protested", "protest", "marched", "strike", "rallied"},
     {V, N, V, N, V}},
}};

const char *const kOnsets[] = {"b", "d", "k", "v", "t", "m", "r", "s", "g", "l", "n", "z",
                               "br", "dr", "kr", "th", "st", "gr"};
const char *const kVowels[] = {"a", "e", "i", "o", "u", "ae", "ou"};
const char *const kCodas[] = {"", "n", "r", "s", "l", "th", "m", "v", "nd"};

class NameMaker {
 public:
  explicit NameMaker(uint64_t seed) : rng_(seed) {}

  std::string Next() {
    for (;;) {
      std::uniform_int_distribution<int> syl(2, 3);
      std::string w;
      const int n = syl(rng_);
      for (int i = 0; i < n; ++i) {
        w += Pick(kOnsets);
        w += Pick(kVowels);
        if (i == n - 1 || Coin()) w += Pick(kCodas);
      }
      w[0] = static_cast<char>(w[0] - 'a' + 'A');
      if (used_.insert(w).second) return w;
    }
  }

 private:
  template <size_t M>
  const char *Pick(const char *const (&arr)[M]) {
    return arr[std::uniform_int_distribution<size_t>(0, M - 1)(rng_)];
  }
  bool Coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }

  std::mt19937_64 rng_;
  std::set<std::string> used_;
};

std::string Fill(std::string_view tmpl, const std::map<char, std::string> &values) {
  std::string out;
  for (size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 2 < tmpl.size() && tmpl[i + 2] == '}') {
      out += values.at(tmpl[i + 1]);
      i += 2;
    } else {
      out.push_back(tmpl[i]);
    }
  }
  return out;
}

struct Participant {
  std::string surface;
  std::string role;
  std::string entity_type;
};

// Tokenizes a filled query template and records where each participant and
// the trigger landed.
EventQuery BuildQuery(std::string id, std::string_view tmpl, const std::string &trigger,
                      Pos pos, const std::map<char, Participant> &parts, std::string gold) {
  EventQuery q;
  q.query_id = std::move(id);
  q.pos = pos;
  q.gold = std::move(gold);
  bool have_mention = false;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == ' ') {
      ++i;
      continue;
    }
    if (tmpl[i] == '{') {
      const Participant &p = parts.at(tmpl[i + 1]);
      TokenSeq toks = Tokenize(p.surface);
      Span span{q.tokens.size(), q.tokens.size() + toks.size() - 1};
      q.tokens.insert(q.tokens.end(), toks.begin(), toks.end());
      q.entities.push_back({span, p.entity_type});
      i += 3;
      continue;
    }
    size_t j = tmpl.find(' ', i);
    if (j == std::string_view::npos) j = tmpl.size();
    std::string word(tmpl.substr(i, j - i));
    if (!have_mention && word == trigger) {
      q.mention = {q.tokens.size(), q.tokens.size()};
      have_mention = true;
    }
    q.tokens.push_back(word);
    i = j;
  }
  return q;
}

}  // namespace

ToyDataset MakeToyDataset(uint64_t seed, size_t num_entries) {
  ToyDataset ds;
  NameMaker names(seed);
  std::mt19937_64 rng(seed ^ 0x5EEDULL);

  std::vector<int> years(351);
  std::iota(years.begin(), years.end(), 1600);
  std::shuffle(years.begin(), years.end(), rng);
  if (num_entries > years.size()) throw std::invalid_argument("too many toy entries");

  const char *const kForces[] = {"army", "fleet", "militia", "legion"};
  const char *const kPowers[] = {"Crown", "League", "Republic", "Duchy"};
  const char *const kWorkers[] = {"miners", "dockworkers", "weavers", "railmen"};

  std::vector<KBEntry> entries;
  for (const auto &kind : kKinds) {
    for (size_t t = 0; t < 5; ++t) ds.lexicon.AddTrigger(kind.triggers[t], kind.type);
  }
  for (size_t e = 0; e < num_entries; ++e) {
    const EventKind &kind = kKinds[e % kKinds.size()];
    const std::string type = kind.type;
    const std::string place = names.Next();
    const std::string year = std::to_string(years[e]);
    Participant a, b;
    if (type == "Battle") {
      a = {names.Next() + " " + kForces[e % 4], kind.role_a, "ORG"};
      b = {names.Next() + " " + kForces[(e + 1) % 4], kind.role_b, "ORG"};
    } else if (type == "Election") {
      a = {names.Next() + " " + names.Next(), kind.role_a, "PERSON"};
      b = {names.Next() + " " + names.Next(), kind.role_b, "PERSON"};
    } else if (type == "Treaty") {
      a = {names.Next() + " " + kPowers[e % 4], kind.role_a, "ORG"};
      b = {names.Next() + " " + kPowers[(e + 2) % 4], kind.role_b, "ORG"};
    } else {
      a = {names.Next() + " " + kWorkers[e % 4], kind.role_a, "ORG"};
      b = {names.Next() + " Company", kind.role_b, "ORG"};
    }
    const std::map<char, std::string> text = {
        {'A', a.surface}, {'B', b.surface}, {'P', place}, {'Y', year}};
    char id[24];
    std::snprintf(id, sizeof(id), "E%03zu", e + 1);
    entries.push_back({id, Fill(kind.title, text), Fill(kind.description, text)});

    ds.lexicon.AddRole(a.surface, a.role, type);
    ds.lexicon.AddRole(b.surface, b.role, type);
    ds.lexicon.AddRole(place, "Place");
    ds.lexicon.AddRole(year, "Time");

    const std::map<char, Participant> parts = {
        {'A', a}, {'B', b}, {'P', {place, "Place", "LOC"}}, {'Y', {year, "Time", "DATE"}}};
    std::array<size_t, 5> order = {0, 1, 2, 3, 4};
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t r = 0; r < order.size(); ++r) {
      const size_t t = order[r];
      const bool test = r == order.size() - 1;
      std::string qid = std::string(test ? "test-" : "train-") + id + "-" + std::to_string(t);
      EventQuery q = BuildQuery(qid, kind.queries[t], kind.triggers[t], kind.pos[t], parts, id);
      (test ? ds.test : ds.train).push_back(std::move(q));
    }
  }
  ds.kb = KnowledgeBase(std::move(entries));
  for (int i = 0; i < 40; ++i) ds.train_name_pool.push_back(names.Next());
  for (int i = 0; i < 40; ++i) ds.heldout_name_pool.push_back(names.Next());
  return ds;
}

}  // namespace evlink
