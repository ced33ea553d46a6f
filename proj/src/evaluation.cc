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

#include "evlink/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "evlink/errors.h"

namespace evlink {

std::optional<double> SplitAccuracy::ratio() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

Accuracy ComputeAccuracy(std::span<const LinkDecision> decisions,
                         std::span<const EventQuery> golds) {
  std::unordered_map<std::string, const EventQuery *> by_id;
  for (const auto &g : golds) {
    if (!by_id.emplace(g.query_id, &g).second) {
      throw DataError("duplicate gold query id \"" + g.query_id + "\"");
    }
  }
  std::unordered_map<std::string, bool> seen;
  Accuracy acc;
  for (const auto &d : decisions) {
    auto it = by_id.find(d.query_id);
    if (it == by_id.end()) {
      throw DataError("decision for unknown query id \"" + d.query_id + "\"");
    }
    if (!seen.emplace(d.query_id, true).second) {
      throw DataError("more than one decision for query id \"" + d.query_id + "\"");
    }
    const EventQuery &g = *it->second;
    const bool ok = d.prediction == g.gold;
    auto add = [&](SplitAccuracy &s) {
      ++s.total;
      if (ok) ++s.correct;
    };
    add(acc.all);
    if (g.pos == Pos::kVerb) add(acc.verb);
    if (g.pos == Pos::kNoun) add(acc.noun);
    add(g.IsNil() ? acc.out_of_kb : acc.in_kb);
  }
  if (seen.size() != by_id.size()) {
    for (const auto &g : golds) {
      if (!seen.count(g.query_id)) {
        throw DataError("no decision for query id \"" + g.query_id + "\"");
      }
    }
  }
  return acc;
}

std::map<size_t, double> RecallAtK(std::span<const CandidateSet> candidates,
                                   std::span<const EventQuery> golds,
                                   std::span<const size_t> ks) {
  std::unordered_map<std::string, const CandidateSet *> by_id;
  for (const auto &c : candidates) by_id.emplace(c.query_id, &c);
  std::vector<std::optional<size_t>> ranks;
  size_t depth = SIZE_MAX;
  for (const auto &g : golds) {
    if (g.IsNil()) continue;
    auto it = by_id.find(g.query_id);
    if (it == by_id.end()) {
      throw DataError("no candidates for query id \"" + g.query_id + "\"");
    }
    depth = std::min(depth, it->second->size());
    ranks.push_back(it->second->RankOf(g.gold));
  }
  std::map<size_t, double> out;
  for (size_t k : ks) {
    if (k == 0) throw std::invalid_argument("recall@0 is undefined");
    if (!ranks.empty() && k > depth) {
      throw std::invalid_argument("recall@" + std::to_string(k) +
                                  " exceeds the retrieved depth " + std::to_string(depth));
    }
    if (ranks.empty()) continue;
    size_t hits = 0;
    for (const auto &r : ranks) {
      if (r && *r < k) ++hits;
    }
    out[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return out;
}

std::string DatasetFingerprint(std::span<const EventQuery> golds) {
  std::vector<std::string> lines;
  lines.reserve(golds.size());
  for (const auto &g : golds) lines.push_back(g.query_id + "\t" + g.gold + "\n");
  std::sort(lines.begin(), lines.end());
  std::string all;
  for (const auto &l : lines) all += l;
  return io::Sha256Hex(all);
}

namespace {

Json Ratio(const SplitAccuracy &s) {
  auto r = s.ratio();
  return r ? Json(*r) : Json(nullptr);
}

SplitAccuracy SplitFromJson(const Json &doc, const char *name) {
  SplitAccuracy s;
  const Json &c = doc.at("counts").at(name);
  s.correct = c.at("correct").get<size_t>();
  s.total = c.at("total").get<size_t>();
  return s;
}

}  // namespace

Json EvalReport::ToJson() const {
  Json recall = Json::object();
  for (const auto &[k, v] : recall_at) recall[std::to_string(k)] = v;
  auto counts = [](const SplitAccuracy &s) {
    return Json{{"correct", s.correct}, {"total", s.total}};
  };
  return {{"accuracy_all", Ratio(accuracy.all)},
          {"accuracy_verb", Ratio(accuracy.verb)},
          {"accuracy_noun", Ratio(accuracy.noun)},
          {"accuracy_in_kb", Ratio(accuracy.in_kb)},
          {"accuracy_out_of_kb", Ratio(accuracy.out_of_kb)},
          {"recall_at", recall},
          {"counts",
           {{"all", counts(accuracy.all)},
            {"verb", counts(accuracy.verb)},
            {"noun", counts(accuracy.noun)},
            {"in_kb", counts(accuracy.in_kb)},
            {"out_of_kb", counts(accuracy.out_of_kb)},
            {"recall", recall_count}}},
          {"fingerprint", fingerprint}};
}

EvalReport EvalReport::FromJson(const Json &doc) {
  EvalReport r;
  try {
    r.accuracy.all = SplitFromJson(doc, "all");
    r.accuracy.verb = SplitFromJson(doc, "verb");
    r.accuracy.noun = SplitFromJson(doc, "noun");
    r.accuracy.in_kb = SplitFromJson(doc, "in_kb");
    r.accuracy.out_of_kb = SplitFromJson(doc, "out_of_kb");
    r.recall_count = doc.at("counts").at("recall").get<size_t>();
    for (const auto &[k, v] : doc.at("recall_at").items()) {
      r.recall_at[std::stoul(k)] = v.get<double>();
    }
    r.fingerprint = doc.at("fingerprint").get<std::string>();
  } catch (const std::exception &e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

EvalReport Evaluate(std::span<const LinkDecision> decisions, std::span<const EventQuery> golds,
                    std::span<const CandidateSet> candidates) {
  EvalReport r;
  r.accuracy = ComputeAccuracy(decisions, golds);
  r.fingerprint = DatasetFingerprint(golds);
  if (!candidates.empty()) {
    size_t depth = SIZE_MAX;
    for (const auto &c : candidates) depth = std::min(depth, c.size());
    std::vector<size_t> ks;
    for (size_t k : kRecallGrid) {
      if (k <= depth) ks.push_back(k);
    }
    r.recall_at = RecallAtK(candidates, golds, ks);
    for (const auto &g : golds) {
      if (!g.IsNil()) ++r.recall_count;
    }
  }
  return r;
}

Json CompareReport(std::span<const std::pair<std::string, EvalReport>> runs) {
  if (runs.empty()) throw UsageError("nothing to compare");
  for (const auto &[name, report] : runs) {
    if (report.fingerprint != runs.front().second.fingerprint) {
      throw DataError("run \"" + name + "\" was evaluated on a different dataset than \"" +
                      runs.front().first + "\"");
    }
  }
  Json rows = Json::array();
  for (const auto &[name, report] : runs) {
    Json row = report.ToJson();
    Json out = {{"run", name}};
    for (const char *col : kCompareColumns) out[col] = row[col];
    rows.push_back(out);
  }
  Json best = Json::object();
  for (const char *col : kCompareColumns) {
    std::optional<double> top;
    for (const auto &row : rows) {
      if (row[col].is_number()) top = std::max(top.value_or(row[col].get<double>()),
                                                row[col].get<double>());
    }
    Json names = Json::array();
    for (const auto &row : rows) {
      if (top && row[col].is_number() && row[col].get<double>() == *top) {
        names.push_back(row["run"]);
      }
    }
    best[col] = names;
  }
  Json columns = Json::array();
  for (const char *col : kCompareColumns) columns.push_back(col);
  return {{"fingerprint", runs.front().second.fingerprint},
          {"columns", columns},
          {"rows", rows},
          {"best", best}};
}

std::string CompareMarkdown(const Json &comparison) {
  std::string out = "| run |";
  std::string rule = "|---|";
  for (const auto &col : comparison.at("columns")) {
    out += " " + col.get<std::string>() + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (const auto &row : comparison.at("rows")) {
    const std::string run = row.at("run").get<std::string>();
    out += "| " + run + " |";
    for (const auto &col : comparison.at("columns")) {
      const std::string c = col.get<std::string>();
      const Json &v = row.at(c);
      std::string cell = "n/a";
      if (v.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v.get<double>());
        cell = buf;
        const Json &best = comparison.at("best").at(c);
        if (std::find(best.begin(), best.end(), Json(run)) != best.end()) {
          cell = "**" + cell + "**";
        }
      }
      out += " " + cell + " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace evlink
