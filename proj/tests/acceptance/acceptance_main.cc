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


// Runs the acceptance checks and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evlink/bm25.h"
#include "evlink/cli.h"
#include "evlink/encoders.h"
#include "evlink/evaluation.h"
#include "evlink/formatting.h"
#include "evlink/io.h"
#include "evlink/neggen.h"
#include "evlink/rerank.h"
#include "evlink/retrieval.h"
#include "evlink/templates.h"
#include "evlink/toydata.h"
#include "evlink/training.h"
#include "gradcheck.h"
#include "test_util.h"

namespace evlink {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void Fail(const std::string &why) {
    if (pass) detail = why;
    pass = false;
  }
  void Expect(bool ok, const std::string &why) {
    if (!ok) Fail(why);
  }
};

std::string Fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

// 1. Exact top-k against brute force.
Outcome DenseRetrievalOracle() {
  Outcome out;
  const auto start = Clock::now();
  std::mt19937_64 rng(20261016);
  std::normal_distribution<double> g(0.0, 1.0);
  const size_t dim = 64;
  for (int trial = 0; trial < 100 && out.pass; ++trial) {
    const size_t n = 1 + rng() % 200;
    const bool ties = trial % 5 == 0;
    std::vector<double> rows(n * dim);
    for (double &x : rows) x = ties ? std::round(g(rng)) : g(rng);
    std::vector<std::string> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = "E" + std::to_string(i);
    DenseIndex index(ids, dim, rows, "oracle", 16);
    std::vector<double> q(dim);
    for (double &x : q) x = ties ? std::round(g(rng)) : g(rng);
    const size_t k = 1 + rng() % std::min<size_t>(20, n);

    std::vector<std::pair<double, size_t>> all;
    for (size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (size_t d = 0; d < dim; ++d) s += q[d] * rows[i * dim + d];
      all.push_back({-s, i});
    }
    std::sort(all.begin(), all.end());
    CandidateSet got = Retrieve(index, q, k);
    out.Expect(got.size() == k, "wrong result size in trial " + std::to_string(trial));
    for (size_t r = 0; r < k && out.pass; ++r) {
      out.Expect(got.candidates[r].id == ids[all[r].second] &&
                     std::abs(got.candidates[r].score + all[r].first) < 1e-9,
                 "mismatch at rank " + std::to_string(r) + " in trial " +
                     std::to_string(trial));
    }
  }
  const double secs = Seconds(start);
  out.Expect(secs < 10.0, "took " + Fmt(secs) + " s");
  if (out.pass) out.detail = "100 instances in " + Fmt(secs) + " s";
  return out;
}

// 2. BM25 against frozen values from the independent scorer.
Outcome Bm25Fixture() {
  Outcome out;
  KnowledgeBase kb({{"D1", "a", "b"},
                    {"D2", "b", "c"},
                    {"D3", "c", "c d"},
                    {"D4", "e", "a a a b"},
                    {"D5", "f", ""}});
  Bm25Index index = Bm25Index::Build(kb);
  struct Row {
    std::vector<std::string> terms;
    std::vector<double> scores;
  };
  const std::vector<Row> rows = {
      {{"a"}, {0.9667338180819126, 0.0, 0.0, 1.1485507288220889, 0.0}},
      {{"b"}, {0.5951853251333921, 0.5951853251333921, 0.0, 0.391251267029311, 0.0}},
      {{"a", "c"},
       {0.9667338180819126, 0.9667338180819126, 1.1538435893235732, 1.1485507288220889, 0.0}},
      {{"c", "c", "d"}, {0.0, 1.9334676361638252, 3.6118983210165174, 0.0, 0.0}},
      {{"a", "b", "c", "d", "e", "f"},
       {1.5619191432153046, 1.5619191432153046, 2.458054731692944, 2.546096887425737,
        1.852711155515368}},
  };
  for (const auto &row : rows) {
    for (size_t d = 0; d < 5; ++d) {
      out.Expect(std::abs(index.Score(row.terms, d) - row.scores[d]) < 1e-9,
                 "score mismatch for document " + std::to_string(d + 1));
    }
  }
  for (const auto &none : std::vector<std::vector<std::string>>{{"z"}, {"x", "y"}, {}}) {
    for (size_t d = 0; d < 5; ++d) {
      out.Expect(index.Score(none, d) == 0.0, "zero-overlap query scored above zero");
    }
  }
  if (out.pass) out.detail = "25 fixture scores and zero-overlap queries";
  return out;
}

// 3. Recall@k is monotone over the grid and 1 at full depth.
Outcome RecallMonotone() {
  Outcome out;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const size_t n = 30, dim = 8;
  for (int trial = 0; trial < 50 && out.pass; ++trial) {
    std::vector<double> rows(n * dim);
    for (double &x : rows) x = g(rng);
    std::vector<std::string> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = "E" + std::to_string(i);
    DenseIndex index(ids, dim, rows, "recall", 8);
    std::vector<CandidateSet> sets;
    std::vector<EventQuery> golds;
    for (int i = 0; i < 25; ++i) {
      std::vector<double> q(dim);
      for (double &x : q) x = g(rng);
      EventQuery gold;
      gold.query_id = "q" + std::to_string(i);
      gold.gold = ids[rng() % n];
      golds.push_back(gold);
      sets.push_back(Retrieve(index, q, n, gold.query_id));
    }
    std::vector<size_t> ks(kRecallGrid.begin(), kRecallGrid.end());
    ks.push_back(n);
    auto r = RecallAtK(sets, golds, ks);
    for (size_t i = 1; i < ks.size(); ++i) {
      out.Expect(r.at(ks[i - 1]) <= r.at(ks[i]), "recall decreased at k=" + std::to_string(ks[i]));
    }
    out.Expect(r.at(n) == 1.0, "recall at full depth is " + Fmt(r.at(n)));
  }
  if (out.pass) out.detail = "50 rankings over the grid";
  return out;
}

TaggedQuery FromFixture(const Json &r) {
  TaggedQuery t;
  t.base.query_id = r["id"];
  t.base.gold = "NIL";
  for (const auto &tok : r["tokens"]) t.base.tokens.push_back(tok);
  t.base.mention = {r["mention"][0], r["mention"][1]};
  for (const auto &a : r["arguments"]) t.arguments.push_back({{a[0], a[1]}, a[2]});
  for (const auto &e : r["entities"]) t.base.entities.push_back({{e[0], e[1]}, e[2]});
  return t;
}

TokenSeq Tokens(const Json &arr) {
  TokenSeq out;
  for (const auto &t : arr) out.push_back(t);
  return out;
}

bool Contains(const TokenSeq &hay, const TokenSeq &needle) {
  return needle.empty() ||
         std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool WellFormed(const TokenSeq &out, size_t max_len) {
  if (out.size() > max_len) return false;
  auto s = std::find(out.begin(), out.end(), Markers::kMentionStart);
  auto e = std::find(out.begin(), out.end(), Markers::kMentionEnd);
  return std::count(out.begin(), out.end(), Markers::kMentionStart) == 1 &&
         std::count(out.begin(), out.end(), Markers::kMentionEnd) == 1 && s < e;
}

// 4. Formatting goldens and randomized round trips.
Outcome FormattingGoldens() {
  Outcome out;
  auto fixture = io::ReadJsonl(testing::TestDir() / "golden/format_fixture.jsonl").records;
  auto expected = io::ReadJsonl(testing::TestDir() / "golden/format_expected.jsonl").records;
  out.Expect(fixture.size() == expected.size() && !fixture.empty(), "fixture size mismatch");
  for (size_t i = 0; i < fixture.size() && out.pass; ++i) {
    TaggedQuery t = FromFixture(fixture[i]);
    size_t n = fixture[i]["max_len"];
    out.Expect(FormatBlink(t.base, n) == Tokens(expected[i]["blink"]) &&
                   FormatEvelink(t.base, t.base.entities, n) == Tokens(expected[i]["evelink"]) &&
                   FormatArguments(t, n) == Tokens(expected[i]["args"]),
               "golden mismatch for " + t.base.query_id);
  }
  std::mt19937_64 rng(1000);
  for (int trial = 0; trial < 1000 && out.pass; ++trial) {
    TaggedQuery t;
    t.base.query_id = "r";
    t.base.gold = "NIL";
    const size_t n = 1 + rng() % 30;
    for (size_t i = 0; i < n; ++i) t.base.tokens.push_back("w" + std::to_string(rng() % 50));
    const size_t ms = rng() % n;
    t.base.mention = {ms, std::min(n - 1, ms + rng() % 3)};
    for (size_t i = 0; i < n;) {
      Span s{i, std::min(n - 1, i + rng() % 3)};
      if (!s.Overlaps(t.base.mention) && rng() % 3 == 0) {
        t.arguments.push_back({s, "R" + std::to_string(rng() % 4)});
      }
      i = s.end + 1 + rng() % 2;
    }
    const size_t max_len = t.base.mention.length() + 3 + rng() % 25;
    TokenSeq blink = FormatBlink(t.base, max_len);
    TokenSeq args = FormatArguments(t, max_len);
    TaggedQuery bare = t;
    bare.arguments.clear();
    out.Expect(WellFormed(blink, max_len) && WellFormed(args, max_len),
               "malformed output in trial " + std::to_string(trial));
    out.Expect(Contains(t.base.tokens, StripMarkers(blink)) &&
                   Contains(t.base.tokens, StripMarkers(args)),
               "stripped output is not a window in trial " + std::to_string(trial));
    out.Expect(FormatArguments(bare, max_len) == blink,
               "argument-free query differs from blink in trial " + std::to_string(trial));
  }
  if (out.pass) out.detail = std::to_string(fixture.size()) + " goldens, 1000 random queries";
  return out;
}

// 5. All four prompt templates render byte-exactly.
Outcome PromptGoldens() {
  Outcome out;
  const fs::path dir = testing::TestDir() / "golden";
  Json fx = io::ReadJson(dir / "prompt_fixture.json");
  TaggedQuery q = TaggedFromJson(fx["query"]);
  std::vector<KBEntry> entries;
  for (const auto &e : fx["kb"]) entries.push_back({e["id"], e["title"], e["description"]});
  KnowledgeBase kb(entries);
  CandidateSet c;
  c.query_id = q.base.query_id;
  for (const auto &id : fx["candidates"]) c.candidates.push_back({id, 0.0});
  PromptLibrary lib = PromptLibrary::Default();
  TokenSeq formatted = FormatArguments(q, 256);
  out.Expect(BuildNegGenPrompt(lib, q, Provenance::kArgumentAware) ==
                 io::ReadFile(dir / "prompt_argument_aware.txt"),
             "argument-aware generation prompt differs");
  out.Expect(BuildNegGenPrompt(lib, q, Provenance::kNonArgumentAware) ==
                 io::ReadFile(dir / "prompt_plain.txt"),
             "plain generation prompt differs");
  out.Expect(BuildRerankPrompt(lib, formatted, c, kb, false) ==
                 io::ReadFile(dir / "prompt_rerank_in_kb.txt"),
             "in-KB re-ranking prompt differs");
  out.Expect(BuildRerankPrompt(lib, formatted, c, kb, true) ==
                 io::ReadFile(dir / "prompt_rerank_nil.txt"),
             "NIL-aware re-ranking prompt differs");
  if (out.pass) out.detail = "4 templates";
  return out;
}

struct ToySetup {
  ToyDataset data;
  std::vector<TaggedQuery> train, test;

  explicit ToySetup(uint64_t seed, size_t entries) : data(MakeToyDataset(seed, entries)) {
    auto tagger = MakeRuleExtractor(data.lexicon);
    for (const auto &q : data.train) train.push_back(Extract(*tagger, q));
    for (const auto &q : data.test) test.push_back(Extract(*tagger, q));
  }
};

void Perturb(std::span<const ParamBlock> blocks, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  for (const auto &b : blocks) {
    for (double &x : b.values) x += g(rng);
  }
}

// 6. Analytic gradients of both training losses on 3-example probes.
Outcome GradientChecks() {
  Outcome out;
  const auto start = Clock::now();
  ToySetup toy(7, 12);
  std::vector<BiExample> bi_probe;
  std::vector<TokenSeq> corpus;
  for (const auto &e : toy.data.kb) corpus.push_back(CandidateText(e, 32));
  for (const auto &q : toy.train) {
    if (q.base.IsNil() || bi_probe.size() == 3) continue;
    bi_probe.push_back({FormatArguments(q, 32), CandidateText(*toy.data.kb.Find(q.base.gold), 32)});
    corpus.push_back(bi_probe.back().query);
  }
  const auto vocab = BuildVocabulary(corpus);

  TinyEncoder qt(vocab, 6, 1), ct(vocab, 6, 2);
  std::vector<ParamBlock> blocks = qt.Blocks();
  for (auto &b : ct.Blocks()) blocks.push_back(b);
  Perturb(blocks, 5);
  GradBuffer grads = ZeroGrads(blocks);
  BiEncoderBatchLoss(qt, ct, bi_probe, &grads);
  auto bi = testing::CheckGradients(
      blocks, grads, [&] { return BiEncoderBatchLoss(qt, ct, bi_probe, nullptr); });
  out.Expect(bi.max_relative_error < 1e-4,
             "bi-encoder relative error " + Fmt(bi.max_relative_error) + " at " + bi.worst);

  CrossScorer scorer(TinyEncoder(vocab, 6, 3), TinyEncoder(vocab, 6, 4), 5, {64, true});
  auto cblocks = scorer.Blocks();
  Perturb(cblocks, 6);
  std::vector<CrossExample> cross_probe;
  for (size_t i = 0; i < 3; ++i) {
    CandidateSet c;
    c.query_id = "p";
    for (size_t j = 0; j < 3; ++j) c.candidates.push_back({toy.data.kb.entries()[i + j].id, 0.0});
    TaggedQuery q = toy.train[i];
    q.base.gold = i == 2 ? "NIL" : c.candidates[i].id;
    cross_probe.push_back(
        MakeCrossExample(scorer, q, c, toy.data.kb, FormatStyle::kArguments, 32));
  }
  GradBuffer cgrads = ZeroGrads(cblocks);
  CrossEncoderBatchLoss(scorer, cross_probe, &cgrads);
  auto cr = testing::CheckGradients(
      cblocks, cgrads, [&] { return CrossEncoderBatchLoss(scorer, cross_probe, nullptr); });
  out.Expect(cr.max_relative_error < 1e-4,
             "cross-encoder relative error " + Fmt(cr.max_relative_error) + " at " + cr.worst);
  const double secs = Seconds(start);
  out.Expect(secs < 30.0, "took " + Fmt(secs) + " s");
  if (out.pass) {
    out.detail = "max relative error " + Fmt(std::max(bi.max_relative_error, cr.max_relative_error)) +
                 " over " + std::to_string(bi.checked + cr.checked) + " parameters in " +
                 Fmt(secs) + " s";
  }
  return out;
}

double RecallAt10(const BiEncoder &model, const KnowledgeBase &kb,
                  const std::vector<TaggedQuery> &queries) {
  DenseIndex index = BuildIndex(kb, *model.candidate, 64);
  DenseRetriever retriever(index, *model.query, FormatStyle::kArguments, 64);
  size_t hits = 0, total = 0;
  for (const auto &q : queries) {
    if (q.base.IsNil()) continue;
    ++total;
    if (retriever.Retrieve(q, 10).RankOf(q.base.gold)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

// 7. Bi-encoder training on the toy set beats its own initialization.
Outcome ToyBiEncoder() {
  Outcome out;
  ToySetup toy(7, 50);
  std::vector<BiExample> data;
  std::vector<TokenSeq> corpus;
  for (const auto &e : toy.data.kb) corpus.push_back(CandidateText(e, 64));
  for (const auto &q : toy.train) {
    if (q.base.IsNil()) continue;
    data.push_back({FormatArguments(q, 64), CandidateText(*toy.data.kb.Find(q.base.gold), 64)});
    corpus.push_back(data.back().query);
  }
  const auto vocab = BuildVocabulary(corpus);
  BiEncoder model(std::make_unique<TinyEncoder>(vocab, 32, 3),
                  std::make_unique<TinyEncoder>(vocab, 32, 4));
  const double before = RecallAt10(model, toy.data.kb, toy.test);
  TrainConfig cfg = TrainConfig::BiEncoderDefaults();
  cfg.learning_rate = 0.01;
  cfg.batch_size = 16;
  cfg.epochs = 30;
  cfg.optimizer = "adam";
  cfg.query_max_len = 64;
  cfg.candidate_max_len = 64;
  cfg.seed = 3;
  TrainBiEncoder(data, model, cfg);
  const double after = RecallAt10(model, toy.data.kb, toy.test);
  out.Expect(after >= 0.8, "trained recall@10 " + Fmt(after) + " below 0.8");
  out.Expect(after > before, "trained recall@10 " + Fmt(after) + " does not beat untrained " +
                                 Fmt(before));
  if (out.pass) out.detail = "recall@10 " + Fmt(before) + " -> " + Fmt(after);
  return out;
}

// Runs the toy pipeline through RunCli with stdout and stderr captured.
class Pipeline {
 public:
  explicit Pipeline(fs::path dir) : dir_(std::move(dir)) {}

  bool Run(std::string *error) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const std::string d = dir_.string();
    const std::string data = d + "/data";
    const std::string kb = d + "/kb.jsonl", bi = d + "/bi.json", index = d + "/index.json";
    const std::string train = d + "/train.tagged.jsonl", test = d + "/test.tagged.jsonl";
    const std::string cands = d + "/test.candidates.jsonl";
    const std::string heldout = d + "/neg.heldout.jsonl";
    std::vector<std::vector<std::string>> steps = {
        {"make-toy", "--out-dir", data},
        {"build-kb", "--input", data + "/kb.jsonl", "--out", kb},
        {"tag", "--queries", data + "/train.jsonl", "--lexicon", data + "/lexicon.jsonl",
         "--out", train},
        {"tag", "--queries", data + "/test.jsonl", "--lexicon", data + "/lexicon.jsonl",
         "--out", test},
        {"train-bi", "--kb", kb, "--train", train, "--valid", test, "--out", bi},
        {"index", "--kb", kb, "--model", bi, "--out", index},
        {"retrieve", "--index", index, "--model", bi, "--queries", test, "--out", cands},
        {"neg-gen", "--tagged", train, "--kb", kb, "--model", bi, "--index", index, "--names",
         data + "/names.json", "--name-pool", "train", "--client-seed", "11", "--out",
         d + "/neg.train.jsonl"},
        {"neg-gen", "--tagged", test, "--kb", kb, "--model", bi, "--index", index, "--names",
         data + "/names.json", "--name-pool", "heldout", "--client-seed", "12", "--out",
         heldout},
        {"neg-gen", "--style", "prune", "--fraction", "0.1", "--tagged", train, "--out",
         d + "/neg.prune.jsonl"},
        {"train-cross", "--kb", kb, "--model", bi, "--index", index, "--train", train,
         "--negatives", d + "/neg.train.jsonl", "--out", d + "/cross.json"},
        {"train-cross", "--kb", kb, "--model", bi, "--index", index, "--train", train,
         "--negatives", d + "/neg.prune.jsonl", "--out", d + "/cross.prune.json"},
        {"train-cross", "--kb", kb, "--model", bi, "--index", index, "--train", train, "--out",
         d + "/cross.noneg.json"},
    };
    auto link = [&](const std::string &name, const std::string &cross,
                    std::vector<std::string> extra) {
      std::vector<std::string> l = {"link", "--kb", kb, "--cross", cross, "--candidates", cands,
                                    "--queries", test, "--negatives", heldout, "--out",
                                    d + "/decisions." + name + ".jsonl"};
      l.insert(l.end(), extra.begin(), extra.end());
      steps.push_back(l);
      steps.push_back({"eval", "--preds", d + "/decisions." + name + ".jsonl", "--gold", test,
                       "--negatives", heldout, "--candidates", cands, "--out",
                       d + "/report." + name + ".json"});
    };
    link("learned", d + "/cross.json", {"--rule", "learned"});
    link("threshold", d + "/cross.json", {"--rule", "threshold"});
    link("literal", d + "/cross.json", {"--rule", "threshold", "--direction", "literal"});
    link("prune", d + "/cross.prune.json", {"--rule", "learned"});
    link("noneg", d + "/cross.noneg.json", {"--rule", "learned"});
    steps.push_back({"report", "--runs", "learned_nil=" + d + "/report.learned.json",
                     "threshold=" + d + "/report.threshold.json",
                     "threshold_literal=" + d + "/report.literal.json",
                     "kb_pruning=" + d + "/report.prune.json", "--out", d + "/comparison.json",
                     "--markdown", d + "/comparison.md"});

    const std::string config = (testing::TestDir() / "data/toy_pipeline.ini").string();
    for (auto &step : steps) {
      std::vector<std::string> args = {"evlink", "--config", config};
      args.insert(args.end(), step.begin(), step.end());
      std::vector<char *> argv;
      for (auto &a : args) argv.push_back(a.data());
      std::ostringstream sink;
      auto *old_err = std::cerr.rdbuf(sink.rdbuf());
      auto *old_out = std::cout.rdbuf(sink.rdbuf());
      const int code = RunCli(static_cast<int>(argv.size()), argv.data());
      std::cerr.rdbuf(old_err);
      std::cout.rdbuf(old_out);
      if (code != 0) {
        *error = step[0] + " exited with " + std::to_string(code) + ": " + sink.str();
        return false;
      }
    }
    return true;
  }

  const fs::path &dir() const { return dir_; }

 private:
  fs::path dir_;
};

// 8. Learned NIL on held-out negatives without hurting in-KB accuracy.
Outcome LearnedNil(const Pipeline &p) {
  Outcome out;
  size_t neg = 0, nil = 0;
  for (const auto &d : LoadDecisions(p.dir() / "decisions.learned.jsonl")) {
    if (!d.query_id.ends_with("#neg")) continue;
    ++neg;
    if (d.IsNil()) ++nil;
  }
  out.Expect(neg > 0, "no held-out negatives were linked");
  const double nil_rate = neg ? static_cast<double>(nil) / static_cast<double>(neg) : 0.0;
  out.Expect(nil_rate >= 0.7, "NIL rate on held-out negatives " + Fmt(nil_rate));
  auto in_kb = [&](const char *name) {
    EvalReport r = EvalReport::FromJson(io::ReadJson(p.dir() / name));
    return r.accuracy.in_kb.ratio().value_or(0.0);
  };
  const double with = in_kb("report.learned.json"), without = in_kb("report.noneg.json");
  out.Expect(std::abs(with - without) <= 0.05,
             "in-KB accuracy " + Fmt(with) + " vs " + Fmt(without) + " without negatives");
  if (out.pass) {
    out.detail = "NIL on " + std::to_string(nil) + "/" + std::to_string(neg) +
                 " negatives, in-KB " + Fmt(with) + " vs " + Fmt(without);
  }
  return out;
}

// 9. Baseline rules report side by side; pruning relabels exactly the pruned golds.
Outcome Baselines(const Pipeline &p) {
  Outcome out;
  Json cmp = io::ReadJson(p.dir() / "comparison.json");
  std::vector<std::string> runs;
  for (const auto &row : cmp["rows"]) runs.push_back(row["run"]);
  out.Expect(runs == std::vector<std::string>{"learned_nil", "threshold", "threshold_literal",
                                              "kb_pruning"},
             "comparison rows are incomplete");
  for (const auto &[name, rule] : std::vector<std::pair<std::string, std::string>>{
           {"learned", "learned_nil"}, {"threshold", "threshold"}, {"literal", "threshold"}}) {
    for (const auto &d : LoadDecisions(p.dir() / ("decisions." + name + ".jsonl"))) {
      if (RuleName(d.rule) != rule) {
        out.Fail(name + " decisions carry rule " + std::string(RuleName(d.rule)));
        break;
      }
    }
  }

  auto doc = io::ReadJsonl(p.dir() / "neg.prune.jsonl");
  std::set<std::string> pruned;
  if (doc.manifest && doc.manifest->contains("outputs")) {
    for (const auto &l : (*doc.manifest)["outputs"]["pruned_labels"]) pruned.insert(l);
  }
  out.Expect(!pruned.empty(), "no labels were pruned");
  std::set<std::string> labels, expected, relabeled;
  for (const auto &q : LoadTagged(p.dir() / "train.tagged.jsonl")) {
    if (q.base.IsNil()) continue;
    labels.insert(q.base.gold);
    if (pruned.count(q.base.gold)) expected.insert(q.base.query_id);
  }
  for (const auto &n : LoadNegatives(p.dir() / "neg.prune.jsonl")) {
    relabeled.insert(n.query.base.query_id);
    out.Expect(n.query.base.IsNil(), "pruned query kept its gold");
  }
  out.Expect(relabeled == expected, "relabeled queries differ from those with pruned golds");
  const size_t want = static_cast<size_t>(std::ceil(0.1 * labels.size() - 1e-9));
  out.Expect(pruned.size() == want, "pruned " + std::to_string(pruned.size()) + " labels, want " +
                                        std::to_string(want));
  if (out.pass) {
    out.detail = "4 runs compared, " + std::to_string(pruned.size()) + " labels pruned, " +
                 std::to_string(relabeled.size()) + " queries relabeled";
  }
  return out;
}

// 10. Byte-identical reports and checkpoints across two runs.
Outcome Determinism(const Pipeline &a, const Pipeline &b) {
  Outcome out;
  size_t compared = 0;
  for (const char *name :
       {"bi.json", "bi.report.json", "index.json", "test.candidates.jsonl", "neg.train.jsonl",
        "neg.heldout.jsonl", "neg.prune.jsonl", "cross.json", "cross.report.json",
        "cross.prune.json", "cross.noneg.json", "decisions.learned.jsonl",
        "report.learned.json", "report.threshold.json", "report.literal.json",
        "report.prune.json", "comparison.json", "comparison.md"}) {
    if (!fs::exists(a.dir() / name) || !fs::exists(b.dir() / name)) {
      out.Fail(std::string("missing ") + name);
      continue;
    }
    ++compared;
    out.Expect(io::ReadFile(a.dir() / name) == io::ReadFile(b.dir() / name),
               std::string(name) + " differs between runs");
  }
  if (out.pass) out.detail = std::to_string(compared) + " artifacts identical";
  return out;
}

int Main() {
  testing::TempDir work("acceptance");
  Pipeline first(work / "run1"), second(work / "run2");
  std::string err1, err2;
  const bool ok1 = first.Run(&err1);
  const bool ok2 = ok1 && second.Run(&err2);
  auto needs = [](bool ok, const std::string &err, std::function<Outcome()> f) {
    return [=] {
      if (ok) return f();
      Outcome o;
      o.Fail("pipeline failed: " + err);
      return o;
    };
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dense retrieval matches brute force", DenseRetrievalOracle},
      {"bm25 fixture scores", Bm25Fixture},
      {"recall@k monotone and complete", RecallMonotone},
      {"formatting goldens and round trips", FormattingGoldens},
      {"prompt goldens", PromptGoldens},
      {"loss gradients", GradientChecks},
      {"toy bi-encoder recall@10", ToyBiEncoder},
      {"learned NIL on held-out negatives", needs(ok1, err1, [&] { return LearnedNil(first); })},
      {"baseline rules and kb pruning", needs(ok1, err1, [&] { return Baselines(first); })},
      {"end-to-end determinism",
       needs(ok2, ok1 ? err2 : err1, [&] { return Determinism(first, second); })},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o.Fail(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first
              << ": " << o.detail << "\n";
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace evlink

int main() { return evlink::Main(); }
