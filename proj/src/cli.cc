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

#include "evlink/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evlink/bm25.h"
#include "evlink/encoders.h"
#include "evlink/errors.h"
#include "evlink/evaluation.h"
#include "evlink/extraction.h"
#include "evlink/formatting.h"
#include "evlink/io.h"
#include "evlink/kbstore.h"
#include "evlink/llm.h"
#include "evlink/neggen.h"
#include "evlink/parallel.h"
#include "evlink/rerank.h"
#include "evlink/retrieval.h"
#include "evlink/templates.h"
#include "evlink/toydata.h"
#include "evlink/training.h"

namespace evlink {
namespace {

namespace fs = std::filesystem;

constexpr char kPathGroup[] = "Paths";

void RequireInput(const fs::path &path) {
  if (!fs::exists(path)) throw DataError("missing input: " + path.string());
}

// The manifest of an artifact: a JSON document's "manifest" member or a JSONL
// file's header record.
std::optional<Json> ManifestOf(const fs::path &path) {
  const std::string text = io::ReadFile(path);
  Json doc = Json::parse(text, nullptr, false);
  if (!doc.is_discarded()) {
    if (doc.is_object() && doc.contains("manifest")) return doc["manifest"];
    if (doc.is_object() && doc.contains(io::kManifestKey)) return doc[io::kManifestKey];
    return std::nullopt;
  }
  try {
    return io::ParseJsonl(text, path.string()).manifest;
  } catch (const DataError &) {
    return std::nullopt;
  }
}

class Invocation {
 public:
  explicit Invocation(const CLI::App &sub) : command_(sub.get_name()) {
    for (const CLI::Option *opt : sub.get_options()) {
      const std::string name = opt->get_single_name();
      if (opt->get_group() == kPathGroup || name == "help" || name.empty()) continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto &r : opt->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = opt->get_default_str();
      }
      config_[name] = value;
      if (name.find("seed") != std::string::npos) seeds_[name] = value;
    }
  }

  void Input(const std::string &role, const fs::path &path) {
    RequireInput(path);
    const std::string digest = io::FileDigest(path);
    inputs_[role] = digest;
    lineage_.insert(digest);
    if (auto m = ManifestOf(path); m && m->contains("lineage")) {
      for (const auto &d : (*m)["lineage"]) lineage_.insert(d.get<std::string>());
    }
  }

  void Output(const std::string &key, Json value) { outputs_[key] = std::move(value); }

  Json manifest() const {
    Json m = {{"command", command_},
              {"config", config_},
              {"seeds", seeds_},
              {"inputs", inputs_},
              {"lineage", std::vector<std::string>(lineage_.begin(), lineage_.end())}};
    if (!outputs_.empty()) m["outputs"] = outputs_;
    return m;
  }

  // Staged writes; nothing touches the disk until Commit.
  void Write(const fs::path &path, std::string content) {
    staged_.emplace_back(path, std::move(content));
  }

  void Commit() const {
    for (const auto &[path, content] : staged_) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      io::WriteFileAtomic(path, content);
      std::cerr << "wrote " << path.string() << "\n";
    }
    std::cout << manifest().dump() << "\n";
  }

 private:
  std::string command_;
  Json config_ = Json::object();
  Json seeds_ = Json::object();
  Json inputs_ = Json::object();
  Json outputs_ = Json::object();
  std::set<std::string> lineage_;
  std::vector<std::pair<fs::path, std::string>> staged_;
};

Json WithManifest(Json doc, const Invocation &inv) {
  doc["manifest"] = inv.manifest();
  return doc;
}

fs::path ReportPathFor(const fs::path &checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".report.json");
  return p;
}

// Checkpoints carry the input settings the model was trained with.
struct ModelSettings {
  FormatStyle style = FormatStyle::kArguments;
  size_t query_max_len = 300;
  size_t candidate_max_len = 300;
};

Json SettingsToJson(const ModelSettings &s) {
  return {{"style", StyleName(s.style)},
          {"query_max_len", s.query_max_len},
          {"candidate_max_len", s.candidate_max_len}};
}

ModelSettings SettingsFromJson(const Json &doc) {
  ModelSettings s;
  try {
    const Json &j = doc.at("settings");
    s.style = ParseStyle(j.at("style").get<std::string>());
    s.query_max_len = j.at("query_max_len").get<size_t>();
    s.candidate_max_len = j.at("candidate_max_len").get<size_t>();
  } catch (const Json::exception &e) {
    throw DataError(std::string("checkpoint without input settings: ") + e.what());
  }
  return s;
}

struct BiModel {
  BiEncoder encoder;
  ModelSettings settings;
};

BiModel LoadBiModel(const fs::path &path) {
  Json doc = io::ReadJson(path);
  return {BiEncoder::FromJson(doc), SettingsFromJson(doc)};
}

struct CrossModel {
  CrossScorer scorer;
  ModelSettings settings;
};

CrossModel LoadCrossModel(const fs::path &path) {
  Json doc = io::ReadJson(path);
  return {CrossScorer::FromJson(doc), SettingsFromJson(doc)};
}

struct NamePools {
  std::vector<std::string> train, heldout;
};

NamePools LoadNames(const fs::path &path) {
  Json doc = io::ReadJson(path);
  try {
    return {doc.at("train").get<std::vector<std::string>>(),
            doc.at("heldout").get<std::vector<std::string>>()};
  } catch (const Json::exception &e) {
    throw DataError(path.string() + ": malformed name pools: " + e.what());
  }
}

std::unique_ptr<TextCompletionClient> MakeClient(const std::string &kind,
                                                 const std::string &command,
                                                 const std::vector<std::string> &names,
                                                 uint64_t seed) {
  if (kind == "mock-swap") return std::make_unique<ArgumentSwapClient>(names, seed);
  if (kind == "mock-echo") return std::make_unique<EchoRerankClient>();
  if (kind == "command") {
    if (command.empty()) throw UsageError("--client command needs --command");
    return std::make_unique<CommandClient>(command);
  }
  throw UsageError("unknown client \"" + kind + "\"");
}

std::string DumpQueries(std::span<const EventQuery> queries, const std::optional<Json> &m) {
  std::vector<Json> records;
  for (const auto &q : queries) records.push_back(QueryToJson(q));
  return io::DumpJsonl(records, m);
}

// ---------------------------------------------------------------------------

struct MakeToyOptions {
  std::string out_dir;
  uint64_t seed = 7;
  size_t entries = 50;
};

void MakeToy(const MakeToyOptions &o, Invocation &inv) {
  ToyDataset ds = MakeToyDataset(o.seed, o.entries);
  const fs::path dir = o.out_dir;
  const Json m = inv.manifest();
  inv.Write(dir / "kb.jsonl", DumpKb(ds.kb, m));
  inv.Write(dir / "train.jsonl", DumpQueries(ds.train, m));
  inv.Write(dir / "test.jsonl", DumpQueries(ds.test, m));
  inv.Write(dir / "lexicon.jsonl", ds.lexicon.Dump());
  inv.Write(dir / "names.json",
            io::DumpJson({{"train", ds.train_name_pool}, {"heldout", ds.heldout_name_pool}}));
}

struct BuildKbOptions {
  std::string input, out;
};

void BuildKb(const BuildKbOptions &o, Invocation &inv) {
  inv.Input("kb", o.input);
  KnowledgeBase kb = LoadKb(o.input);
  inv.Write(o.out, DumpKb(kb, inv.manifest()));
}

struct TagOptions {
  std::string queries, lexicon, out;
  std::string extractor = "rule";
  int threads = 1;
};

void Tag(const TagOptions &o, Invocation &inv) {
  inv.Input("queries", o.queries);
  std::unique_ptr<ExtractorAdapter> extractor;
  if (o.extractor == "rule") {
    if (o.lexicon.empty()) throw UsageError("the rule extractor needs --lexicon");
    inv.Input("lexicon", o.lexicon);
    extractor = MakeRuleExtractor(RoleLexicon::Load(o.lexicon));
  } else if (o.extractor == "none") {
    extractor = MakeNullExtractor();
  } else {
    throw UsageError("unknown extractor \"" + o.extractor + "\"");
  }
  std::vector<EventQuery> queries = LoadQueries(o.queries);
  std::vector<TaggedQuery> tagged = ExtractAll(*extractor, queries, o.threads);
  inv.Write(o.out, DumpTagged(tagged, inv.manifest()));
}

struct FormatOptions {
  std::string tagged, out;
  std::string style = "args";
  size_t max_len = 300;
};

void Format(const FormatOptions &o, Invocation &inv) {
  inv.Input("tagged", o.tagged);
  const FormatStyle style = ParseStyle(o.style);
  std::vector<Json> records;
  for (const auto &q : LoadTagged(o.tagged)) {
    records.push_back({{"query_id", q.base.query_id},
                       {"format", StyleName(style)},
                       {"tokens", FormatQuery(q, style, o.max_len)}});
  }
  inv.Write(o.out, io::DumpJsonl(records, inv.manifest()));
}

struct TrainBiOptions {
  std::string kb, train, valid, out, report;
  std::string style = "args";
  std::string encoder = "tiny";
  size_t dim = 32;
  TrainConfig cfg = TrainConfig::BiEncoderDefaults();
};

double RecallAt10(const BiEncoder &bi, const ModelSettings &s, const KnowledgeBase &kb,
                  std::span<const TaggedQuery> queries) {
  DenseIndex index = BuildIndex(kb, *bi.candidate, s.candidate_max_len);
  DenseRetriever retriever(index, *bi.query, s.style, s.query_max_len);
  std::vector<CandidateSet> sets;
  std::vector<EventQuery> golds;
  for (const auto &q : queries) {
    sets.push_back(retriever.Retrieve(q, 10));
    golds.push_back(q.base);
  }
  const size_t k = std::min<size_t>(10, kb.size());
  auto r = RecallAtK(sets, golds, std::span<const size_t>(&k, 1));
  return r.empty() ? 0.0 : r.at(k);
}

void TrainBi(const TrainBiOptions &o, Invocation &inv) {
  inv.Input("kb", o.kb);
  inv.Input("train", o.train);
  if (!o.valid.empty()) inv.Input("valid", o.valid);
  o.cfg.Validate();
  KnowledgeBase kb = LoadKb(o.kb);
  std::vector<TaggedQuery> train = LoadTagged(o.train);
  ModelSettings s{ParseStyle(o.style), o.cfg.query_max_len, o.cfg.candidate_max_len};

  std::vector<BiExample> data;
  for (const auto &q : train) {
    if (q.base.IsNil()) continue;
    const KBEntry *e = kb.Find(q.base.gold);
    if (e == nullptr) throw DataError("training gold \"" + q.base.gold + "\" is not in the KB");
    data.push_back({FormatQuery(q, s.style, s.query_max_len),
                    CandidateText(*e, s.candidate_max_len)});
  }
  BiModel model{{}, s};
  TrainReport report;
  if (o.encoder == "tiny") {
    std::vector<TokenSeq> corpus;
    for (const auto &e : kb) corpus.push_back(CandidateText(e, s.candidate_max_len));
    for (const auto &ex : data) corpus.push_back(ex.query);
    const auto vocab = BuildVocabulary(corpus);
    model.encoder = BiEncoder(std::make_unique<TinyEncoder>(vocab, o.dim, o.cfg.seed),
                              std::make_unique<TinyEncoder>(vocab, o.dim, o.cfg.seed + 1));
    report = TrainBiEncoder(data, model.encoder, o.cfg);
  } else if (o.encoder == "hashing") {
    model.encoder = BiEncoder(std::make_unique<HashingEncoder>(o.dim, o.cfg.seed),
                              std::make_unique<HashingEncoder>(o.dim, o.cfg.seed));
    report.model = "biencoder";
    report.config = o.cfg;
    report.examples = data.size();
  } else {
    throw UsageError("unknown encoder \"" + o.encoder + "\"");
  }
  if (!o.valid.empty()) {
    std::vector<TaggedQuery> valid = LoadTagged(o.valid);
    std::erase_if(valid, [](const TaggedQuery &q) { return q.base.IsNil(); });
    report.validation = RecallAt10(model.encoder, s, kb, valid);
    report.validation_metric = "recall@10";
  }
  const fs::path report_path = o.report.empty() ? ReportPathFor(o.out) : fs::path(o.report);
  report.checkpoint = fs::path(o.out).filename().string();
  Json ckpt = model.encoder.ToJson();
  ckpt["settings"] = SettingsToJson(s);
  inv.Write(o.out, io::DumpJson(WithManifest(ckpt, inv)));
  inv.Write(report_path, io::DumpJson(WithManifest(report.ToJson(), inv)));
}

struct IndexOptions {
  std::string kb, model, out;
  int threads = 1;
};

void Index(const IndexOptions &o, Invocation &inv) {
  inv.Input("kb", o.kb);
  inv.Input("model", o.model);
  KnowledgeBase kb = LoadKb(o.kb);
  BiModel m = LoadBiModel(o.model);
  DenseIndex index = BuildIndex(kb, *m.encoder.candidate, m.settings.candidate_max_len,
                                o.threads);
  inv.Write(o.out, io::DumpJson(WithManifest(index.ToJson(), inv)));
}

struct RetrieveOptions {
  std::string index, model, queries, out;
  size_t k = 10;
  bool mine = false;
  bool bm25 = false;
  std::string kb;
};

void RetrieveCmd(const RetrieveOptions &o, Invocation &inv) {
  inv.Input("queries", o.queries);
  std::vector<TaggedQuery> queries = LoadTagged(o.queries);
  std::vector<CandidateSet> sets;
  if (o.bm25) {
    if (o.kb.empty()) throw UsageError("BM25 retrieval needs --kb");
    inv.Input("kb", o.kb);
    KnowledgeBase kb = LoadKb(o.kb);
    Bm25Index bm25 = Bm25Index::Build(kb);
    for (const auto &q : queries) sets.push_back(bm25.Retrieve(q.base, o.k));
  } else {
    inv.Input("index", o.index);
    inv.Input("model", o.model);
    DenseIndex index = DenseIndex::FromJson(io::ReadJson(o.index));
    BiModel m = LoadBiModel(o.model);
    DenseRetriever retriever(index, *m.encoder.query, m.settings.style,
                             m.settings.query_max_len);
    if (o.mine) {
      sets = MineCandidates(queries, retriever, o.k);
    } else {
      for (const auto &q : queries) sets.push_back(retriever.Retrieve(q, o.k));
    }
  }
  inv.Write(o.out, DumpCandidates(sets, inv.manifest()));
}

struct NegGenOptions {
  std::string tagged, kb, model, index, names, lexicon, out, log;
  std::string style = "args";
  std::string client = "mock-swap";
  std::string command;
  std::string name_pool = "train";
  uint64_t client_seed = 0;
  double fraction = 0.1;
  NegGenConfig cfg;
};

void NegGen(const NegGenOptions &o, Invocation &inv) {
  inv.Input("tagged", o.tagged);
  std::vector<TaggedQuery> pool = LoadTagged(o.tagged);
  const Provenance style = ParseProvenance(o.style);
  if (style == Provenance::kKbPruning) {
    PruningResult pruned = KbPruningNegatives(pool, o.fraction, o.cfg.seed);
    std::vector<NegativeExample> negatives;
    for (const auto &q : pruned.queries) {
      if (std::find(pruned.relabeled_ids.begin(), pruned.relabeled_ids.end(),
                    q.base.query_id) == pruned.relabeled_ids.end()) {
        continue;
      }
      NegativeExample n;
      n.query = q;
      n.origin_query_id = q.base.query_id;
      n.provenance = Provenance::kKbPruning;
      negatives.push_back(std::move(n));
    }
    inv.Output("pruned_labels", pruned.pruned_labels);
    inv.Write(o.out, DumpNegatives(negatives, inv.manifest()));
    return;
  }
  inv.Input("kb", o.kb);
  inv.Input("model", o.model);
  inv.Input("index", o.index);
  std::vector<std::string> names;
  if (o.client == "mock-swap") {
    inv.Input("names", o.names);
    NamePools pools = LoadNames(o.names);
    if (o.name_pool != "train" && o.name_pool != "heldout") {
      throw UsageError("--name-pool must be train or heldout");
    }
    names = o.name_pool == "train" ? pools.train : pools.heldout;
  }
  std::unique_ptr<ExtractorAdapter> retagger;
  NegGenConfig cfg = o.cfg;
  if (!o.lexicon.empty()) {
    inv.Input("lexicon", o.lexicon);
    retagger = MakeRuleExtractor(RoleLexicon::Load(o.lexicon));
    cfg.retagger = retagger.get();
  }
  BiModel m = LoadBiModel(o.model);
  DenseIndex index = DenseIndex::FromJson(io::ReadJson(o.index));
  DenseRetriever retriever(index, *m.encoder.query, m.settings.style, m.settings.query_max_len);
  auto client = MakeClient(o.client, o.command, names, o.client_seed);
  NegGenResult result =
      GenerateNegatives(pool, retriever, *client, PromptLibrary::Default(), style, cfg);
  size_t accepted = result.negatives.size();
  std::cerr << "accepted " << accepted << " of " << result.log.size() << " generations\n";
  inv.Write(o.out, DumpNegatives(result.negatives, inv.manifest()));
  if (!o.log.empty()) inv.Write(o.log, DumpGenerationLog(result.log, inv.manifest()));
}

struct TrainCrossOptions {
  std::string kb, model, index, train, out, report;
  std::vector<std::string> negatives;
  size_t max_len = 256;
  TrainConfig cfg = TrainConfig::CrossEncoderDefaults();
};

void TrainCross(const TrainCrossOptions &o, Invocation &inv) {
  inv.Input("kb", o.kb);
  inv.Input("model", o.model);
  inv.Input("index", o.index);
  inv.Input("train", o.train);
  o.cfg.Validate();
  KnowledgeBase kb = LoadKb(o.kb);
  BiModel bi = LoadBiModel(o.model);
  DenseIndex full = DenseIndex::FromJson(io::ReadJson(o.index));

  std::vector<NegativeExample> negatives;
  std::set<std::string> pruned;
  for (size_t i = 0; i < o.negatives.size(); ++i) {
    inv.Input("negatives" + std::to_string(i), o.negatives[i]);
    for (auto &n : LoadNegatives(o.negatives[i])) negatives.push_back(std::move(n));
    if (auto m = ManifestOf(o.negatives[i]); m && m->contains("outputs") &&
                                              (*m)["outputs"].contains("pruned_labels")) {
      for (const auto &l : (*m)["outputs"]["pruned_labels"]) pruned.insert(l.get<std::string>());
    }
  }
  const std::vector<std::string> pruned_list(pruned.begin(), pruned.end());
  DenseIndex index = full.Without(pruned_list);
  DenseRetriever retriever(index, *bi.encoder.query, bi.settings.style,
                           bi.settings.query_max_len);

  ModelSettings s{bi.settings.style, o.cfg.query_max_len, o.max_len};
  CrossScorer scorer = CrossScorer::FromBiEncoder(bi.encoder, o.cfg.seed, {o.max_len, true});

  std::vector<TaggedQuery> train = LoadTagged(o.train);
  std::erase_if(train, [&](const TaggedQuery &q) {
    return q.base.IsNil() || pruned.count(q.base.gold) > 0;
  });
  std::vector<CandidateSet> mined = MineCandidates(train, retriever, o.cfg.k);
  std::vector<CrossExample> pos, neg;
  for (size_t i = 0; i < train.size(); ++i) {
    pos.push_back(MakeCrossExample(scorer, train[i], mined[i], kb, s.style, s.query_max_len));
  }
  for (const auto &n : negatives) {
    CandidateSet set = n.provenance == Provenance::kKbPruning
                           ? retriever.Retrieve(n.query, o.cfg.k)
                           : PairedCandidates(n);
    neg.push_back(MakeCrossExample(scorer, n.query, set, kb, s.style, s.query_max_len));
  }
  TrainReport report = TrainCrossEncoder(pos, neg, scorer, o.cfg);
  const fs::path report_path = o.report.empty() ? ReportPathFor(o.out) : fs::path(o.report);
  report.checkpoint = fs::path(o.out).filename().string();
  Json ckpt = scorer.ToJson();
  ckpt["settings"] = SettingsToJson(s);
  inv.Write(o.out, io::DumpJson(WithManifest(ckpt, inv)));
  inv.Write(report_path, io::DumpJson(WithManifest(report.ToJson(), inv)));
}

struct LinkOptions {
  std::string kb, cross, candidates, queries, out;
  std::vector<std::string> negatives;
  std::string rule = "learned";
  double theta = 0.5;
  std::string direction = "conventional";
  size_t k = 10;
  std::string client = "mock-echo";
  std::string command;
  bool allow_nil = false;
  std::string style = "args";
  size_t query_max_len = 256;
  int threads = 1;
};

void Link(const LinkOptions &o, Invocation &inv) {
  inv.Input("kb", o.kb);
  inv.Input("queries", o.queries);
  inv.Input("candidates", o.candidates);
  KnowledgeBase kb = LoadKb(o.kb);
  const DecisionRule rule = ParseRule(o.rule);
  const ThresholdDirection direction = ParseDirection(o.direction);
  if (!(o.theta >= 0.0 && o.theta <= 1.0)) throw UsageError("--theta must lie in [0, 1]");

  // (query, candidates) pairs: retrieved test queries, then negatives.
  std::vector<TaggedQuery> queries = LoadTagged(o.queries);
  std::map<std::string, CandidateSet> by_id;
  for (auto &c : LoadCandidates(o.candidates)) by_id[c.query_id] = std::move(c);
  std::vector<CandidateSet> sets;
  for (const auto &q : queries) {
    auto it = by_id.find(q.base.query_id);
    if (it == by_id.end()) {
      throw DataError("no candidates for query \"" + q.base.query_id + "\" in " + o.candidates);
    }
    sets.push_back(it->second);
  }
  for (size_t i = 0; i < o.negatives.size(); ++i) {
    inv.Input("negatives" + std::to_string(i), o.negatives[i]);
    for (const auto &n : LoadNegatives(o.negatives[i])) {
      queries.push_back(n.query);
      sets.push_back(PairedCandidates(n));
    }
  }
  for (auto &s : sets) {
    if (s.size() < o.k) throw DataError("query \"" + s.query_id + "\" has fewer than k candidates");
    s.candidates.resize(o.k);
  }

  std::vector<LinkDecision> decisions(queries.size());
  if (rule == DecisionRule::kLlm) {
    auto client = MakeClient(o.client, o.command, {}, 0);
    PromptLibrary prompts = PromptLibrary::Default();
    const FormatStyle style = ParseStyle(o.style);
    ParallelFor(queries.size(), static_cast<size_t>(std::max(1, o.threads)), [&](size_t i) {
      TokenSeq q = FormatQuery(queries[i], style, o.query_max_len);
      decisions[i] = LlmRerank(*client, prompts, q, sets[i], kb, o.allow_nil);
    });
  } else {
    if (o.cross.empty()) throw UsageError("rule \"" + o.rule + "\" needs --cross");
    inv.Input("cross", o.cross);
    CrossModel m = LoadCrossModel(o.cross);
    ParallelFor(queries.size(), static_cast<size_t>(std::max(1, o.threads)), [&](size_t i) {
      TokenSeq q = FormatQuery(queries[i], m.settings.style, m.settings.query_max_len);
      std::vector<double> scores = ScorePairs(m.scorer, q, sets[i], kb);
      if (rule == DecisionRule::kLearnedNil) {
        decisions[i] = SelectLearnedNil(scores, sets[i]);
      } else {
        decisions[i] = SelectThreshold(std::span<const double>(scores).subspan(1), sets[i],
                                       o.theta, direction, scores[0]);
      }
    });
  }
  inv.Write(o.out, DumpDecisions(decisions, inv.manifest()));
}

struct EvalOptions {
  std::string preds, gold, candidates, out;
  std::vector<std::string> negatives;
};

void Eval(const EvalOptions &o, Invocation &inv) {
  inv.Input("preds", o.preds);
  inv.Input("gold", o.gold);
  std::set<std::string> lineage;
  if (auto m = ManifestOf(o.preds); m && m->contains("lineage")) {
    for (const auto &d : (*m)["lineage"]) lineage.insert(d.get<std::string>());
  }
  auto check_lineage = [&](const std::string &path) {
    if (!lineage.count(io::FileDigest(path))) {
      throw DataError("predictions in " + o.preds + " were not produced from " + path);
    }
  };
  check_lineage(o.gold);
  std::vector<EventQuery> golds = LoadQueries(o.gold);
  for (size_t i = 0; i < o.negatives.size(); ++i) {
    inv.Input("negatives" + std::to_string(i), o.negatives[i]);
    check_lineage(o.negatives[i]);
    for (const auto &n : LoadNegatives(o.negatives[i])) golds.push_back(n.query.base);
  }
  std::vector<LinkDecision> decisions = LoadDecisions(o.preds);
  std::vector<CandidateSet> candidates;
  if (!o.candidates.empty()) {
    inv.Input("candidates", o.candidates);
    candidates = LoadCandidates(o.candidates);
  }
  EvalReport report = Evaluate(decisions, golds, candidates);
  inv.Write(o.out, io::DumpJson(WithManifest(report.ToJson(), inv)));
}

struct ReportOptions {
  std::vector<std::string> runs;
  std::string out, markdown;
};

void ReportCmd(const ReportOptions &o, Invocation &inv) {
  std::vector<std::pair<std::string, EvalReport>> runs;
  for (const auto &spec : o.runs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--runs entries look like name=path");
    const std::string name = spec.substr(0, eq);
    const std::string path = spec.substr(eq + 1);
    inv.Input("run:" + name, path);
    runs.emplace_back(name, EvalReport::FromJson(io::ReadJson(path)));
  }
  Json comparison = CompareReport(runs);
  inv.Write(o.out, io::DumpJson(WithManifest(comparison, inv)));
  if (!o.markdown.empty()) inv.Write(o.markdown, CompareMarkdown(comparison));
}

// ---------------------------------------------------------------------------

template <typename T>
CLI::Option *PathOpt(CLI::App *sub, const std::string &name, T &target,
                     const std::string &help, bool required = false) {
  CLI::Option *opt = sub->add_option(name, target, help)->group(kPathGroup);
  if (required) opt->required();
  return opt;
}

void AddTrainConfig(CLI::App *sub, TrainConfig &cfg) {
  sub->add_option("--lr", cfg.learning_rate, "learning rate")->capture_default_str();
  sub->add_option("--batch", cfg.batch_size, "batch size")->capture_default_str();
  sub->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
  sub->add_option("--query-max-len", cfg.query_max_len, "query length budget")
      ->capture_default_str();
  sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  sub->add_option("--optimizer", cfg.optimizer, "sgd or adam")->capture_default_str();
}

}  // namespace

int RunCli(int argc, char **argv) {
  CLI::App app{"evlink: argument-aware event linking"};
  app.set_config("--config", "", "INI file with one [command] section per subcommand");
  app.require_subcommand(1);
  std::map<CLI::App *, std::function<void(Invocation &)>> actions;

  MakeToyOptions toy;
  auto *c = app.add_subcommand("make-toy", "write the synthetic toy dataset");
  PathOpt(c, "--out-dir", toy.out_dir, "output directory", true);
  c->add_option("--seed", toy.seed, "dataset seed")->capture_default_str();
  c->add_option("--entries", toy.entries, "number of KB entries")->capture_default_str();
  actions[c] = [&](Invocation &inv) { MakeToy(toy, inv); };

  BuildKbOptions bkb;
  c = app.add_subcommand("build-kb", "validate and normalize a knowledge base");
  PathOpt(c, "--input", bkb.input, "KB entries (JSONL)", true);
  PathOpt(c, "--out", bkb.out, "output KB", true);
  actions[c] = [&](Invocation &inv) { BuildKb(bkb, inv); };

  TagOptions tag;
  c = app.add_subcommand("tag", "tag event arguments");
  PathOpt(c, "--queries", tag.queries, "queries (JSONL)", true);
  PathOpt(c, "--lexicon", tag.lexicon, "role lexicon for the rule extractor");
  PathOpt(c, "--out", tag.out, "tagged queries", true);
  c->add_option("--extractor", tag.extractor, "rule or none")->capture_default_str();
  c->add_option("--threads", tag.threads, "worker threads")->capture_default_str();
  actions[c] = [&](Invocation &inv) { Tag(tag, inv); };

  FormatOptions fmt;
  c = app.add_subcommand("format", "serialize tagged queries");
  PathOpt(c, "--tagged", fmt.tagged, "tagged queries", true);
  PathOpt(c, "--out", fmt.out, "formatted queries", true);
  c->add_option("--style", fmt.style, "blink, evelink or args")->capture_default_str();
  c->add_option("--max-len", fmt.max_len, "token budget")->capture_default_str();
  actions[c] = [&](Invocation &inv) { Format(fmt, inv); };

  TrainBiOptions tbi;
  c = app.add_subcommand("train-bi", "train the bi-encoder");
  PathOpt(c, "--kb", tbi.kb, "knowledge base", true);
  PathOpt(c, "--train", tbi.train, "tagged training queries", true);
  PathOpt(c, "--valid", tbi.valid, "tagged validation queries");
  PathOpt(c, "--out", tbi.out, "checkpoint", true);
  PathOpt(c, "--report", tbi.report, "training report (default: next to the checkpoint)");
  c->add_option("--style", tbi.style, "query format")->capture_default_str();
  c->add_option("--encoder", tbi.encoder, "tiny or hashing")->capture_default_str();
  c->add_option("--dim", tbi.dim, "embedding size")->capture_default_str();
  c->add_option("--candidate-max-len", tbi.cfg.candidate_max_len, "candidate length budget")
      ->capture_default_str();
  AddTrainConfig(c, tbi.cfg);
  actions[c] = [&](Invocation &inv) { TrainBi(tbi, inv); };

  IndexOptions idx;
  c = app.add_subcommand("index", "embed the knowledge base");
  PathOpt(c, "--kb", idx.kb, "knowledge base", true);
  PathOpt(c, "--model", idx.model, "bi-encoder checkpoint", true);
  PathOpt(c, "--out", idx.out, "index file", true);
  c->add_option("--threads", idx.threads, "worker threads")->capture_default_str();
  actions[c] = [&](Invocation &inv) { Index(idx, inv); };

  RetrieveOptions ret;
  c = app.add_subcommand("retrieve", "retrieve top-k candidates");
  PathOpt(c, "--index", ret.index, "index file");
  PathOpt(c, "--model", ret.model, "bi-encoder checkpoint");
  PathOpt(c, "--kb", ret.kb, "knowledge base (BM25 only)");
  PathOpt(c, "--queries", ret.queries, "tagged queries", true);
  PathOpt(c, "--out", ret.out, "candidate sets", true);
  c->add_option("--k", ret.k, "candidates per query")->capture_default_str();
  c->add_flag("--mine", ret.mine, "put a missed gold in the last slot");
  c->add_flag("--bm25", ret.bm25, "use the BM25 baseline");
  actions[c] = [&](Invocation &inv) {
    if (!ret.bm25 && (ret.index.empty() || ret.model.empty())) {
      throw UsageError("dense retrieval needs --index and --model");
    }
    RetrieveCmd(ret, inv);
  };

  NegGenOptions ng;
  c = app.add_subcommand("neg-gen", "generate out-of-KB negatives");
  PathOpt(c, "--tagged", ng.tagged, "tagged origin queries", true);
  PathOpt(c, "--kb", ng.kb, "knowledge base");
  PathOpt(c, "--model", ng.model, "bi-encoder checkpoint");
  PathOpt(c, "--index", ng.index, "index file");
  PathOpt(c, "--names", ng.names, "name pools for the mock generator");
  PathOpt(c, "--lexicon", ng.lexicon, "lexicon for re-tagging plain generations");
  PathOpt(c, "--out", ng.out, "negatives", true);
  PathOpt(c, "--log", ng.log, "generation log");
  c->add_option("--style", ng.style, "args, plain or prune")->capture_default_str();
  c->add_option("--count", ng.cfg.count, "accepted generations wanted")->capture_default_str();
  c->add_option("--seed", ng.cfg.seed, "sampling seed")->capture_default_str();
  c->add_option("--k", ng.cfg.k, "paired candidates")->capture_default_str();
  c->add_option("--max-in-flight", ng.cfg.max_in_flight, "concurrent requests")
      ->capture_default_str();
  c->add_option("--max-attempts", ng.cfg.max_attempts, "tries per query")->capture_default_str();
  c->add_option("--client", ng.client, "mock-swap or command")->capture_default_str();
  c->add_option("--command", ng.command, "shell command for --client command");
  c->add_option("--name-pool", ng.name_pool, "train or heldout")->capture_default_str();
  c->add_option("--client-seed", ng.client_seed, "mock generator seed")->capture_default_str();
  c->add_option("--fraction", ng.fraction, "label fraction for prune")->capture_default_str();
  actions[c] = [&](Invocation &inv) { NegGen(ng, inv); };

  TrainCrossOptions tcr;
  c = app.add_subcommand("train-cross", "train the cross-encoder with a learned NIL");
  PathOpt(c, "--kb", tcr.kb, "knowledge base", true);
  PathOpt(c, "--model", tcr.model, "bi-encoder checkpoint", true);
  PathOpt(c, "--index", tcr.index, "index file", true);
  PathOpt(c, "--train", tcr.train, "tagged training queries", true);
  PathOpt(c, "--negatives", tcr.negatives, "negatives files");
  PathOpt(c, "--out", tcr.out, "checkpoint", true);
  PathOpt(c, "--report", tcr.report, "training report (default: next to the checkpoint)");
  c->add_option("--k", tcr.cfg.k, "mined candidates")->capture_default_str();
  c->add_option("--max-len", tcr.max_len, "pair length budget")->capture_default_str();
  c->add_option("--negative-ratio", tcr.cfg.negative_ratio,
                "negatives kept per positive (<= 0 keeps all)")
      ->capture_default_str();
  AddTrainConfig(c, tcr.cfg);
  actions[c] = [&](Invocation &inv) { TrainCross(tcr, inv); };

  LinkOptions lk;
  c = app.add_subcommand("link", "re-rank candidates and decide");
  PathOpt(c, "--kb", lk.kb, "knowledge base", true);
  PathOpt(c, "--cross", lk.cross, "cross-encoder checkpoint");
  PathOpt(c, "--candidates", lk.candidates, "candidate sets", true);
  PathOpt(c, "--queries", lk.queries, "tagged queries", true);
  PathOpt(c, "--negatives", lk.negatives, "negatives to link with their paired candidates");
  PathOpt(c, "--out", lk.out, "decisions", true);
  c->add_option("--rule", lk.rule, "learned, threshold or llm")->capture_default_str();
  c->add_option("--theta", lk.theta, "threshold")->capture_default_str();
  c->add_option("--direction", lk.direction, "conventional or literal")->capture_default_str();
  c->add_option("--k", lk.k, "candidates considered")->capture_default_str();
  c->add_option("--client", lk.client, "mock-echo or command")->capture_default_str();
  c->add_option("--command", lk.command, "shell command for --client command");
  c->add_flag("--allow-nil", lk.allow_nil, "use the NIL-aware re-ranking prompt");
  c->add_option("--style", lk.style, "query format for the llm rule")->capture_default_str();
  c->add_option("--query-max-len", lk.query_max_len, "query budget for the llm rule")
      ->capture_default_str();
  c->add_option("--threads", lk.threads, "worker threads")->capture_default_str();
  actions[c] = [&](Invocation &inv) { Link(lk, inv); };

  EvalOptions ev;
  c = app.add_subcommand("eval", "score decisions against golds");
  PathOpt(c, "--preds", ev.preds, "decisions", true);
  PathOpt(c, "--gold", ev.gold, "gold queries", true);
  PathOpt(c, "--negatives", ev.negatives, "negatives linked alongside the golds");
  PathOpt(c, "--candidates", ev.candidates, "candidate sets for recall@k");
  PathOpt(c, "--out", ev.out, "report", true);
  actions[c] = [&](Invocation &inv) { Eval(ev, inv); };

  ReportOptions rp;
  c = app.add_subcommand("report", "compare evaluation reports");
  PathOpt(c, "--runs", rp.runs, "name=report.json entries", true);
  PathOpt(c, "--out", rp.out, "comparison document", true);
  PathOpt(c, "--markdown", rp.markdown, "markdown table");
  actions[c] = [&](Invocation &inv) { ReportCmd(rp, inv); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto &[sub, action] : actions) {
      if (sub->parsed()) {
        Invocation inv(*sub);
        action(inv);
        inv.Commit();
      }
    }
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace evlink
