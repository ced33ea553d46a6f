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

#include "evlink/formatting.h"

#include <algorithm>
#include <stdexcept>

namespace evlink {

std::string_view StyleName(FormatStyle style) {
  switch (style) {
    case FormatStyle::kBlink: return "blink";
    case FormatStyle::kEvelink: return "evelink";
    case FormatStyle::kArguments: break;
  }
  return "args";
}

FormatStyle ParseStyle(std::string_view name) {
  if (name == "blink") return FormatStyle::kBlink;
  if (name == "evelink") return FormatStyle::kEvelink;
  if (name == "args" || name == "arguments") return FormatStyle::kArguments;
  throw std::invalid_argument("unknown format style \"" + std::string(name) + "\"");
}

namespace {

// A sequence of atomic units around one mention unit.
struct Layout {
  std::vector<TokenSeq> units;
  size_t mention = 0;
};

// Returns the [first, last] unit range picked by the centering rule.
std::pair<size_t, size_t> CenterUnits(const Layout &layout, size_t max_len) {
  size_t used = layout.units[layout.mention].size();
  if (used > max_len) {
    throw std::invalid_argument("max_len " + std::to_string(max_len) +
                                " cannot hold the marked mention (" +
                                std::to_string(used) + " tokens)");
  }
  size_t first = layout.mention, last = layout.mention;
  size_t left_tokens = 0, right_tokens = 0;
  bool left_open = first > 0;
  bool right_open = last + 1 < layout.units.size();
  while (left_open || right_open) {
    bool take_left = left_open && (!right_open || left_tokens <= right_tokens);
    if (take_left) {
      size_t sz = layout.units[first - 1].size();
      if (used + sz > max_len) {
        left_open = false;
        continue;
      }
      used += sz;
      left_tokens += sz;
      --first;
      left_open = first > 0;
    } else {
      size_t sz = layout.units[last + 1].size();
      if (used + sz > max_len) {
        right_open = false;
        continue;
      }
      used += sz;
      right_tokens += sz;
      ++last;
      right_open = last + 1 < layout.units.size();
    }
  }
  return {first, last};
}

TokenSeq Flatten(const Layout &layout, std::pair<size_t, size_t> range) {
  TokenSeq out;
  for (size_t u = range.first; u <= range.second; ++u) {
    out.insert(out.end(), layout.units[u].begin(), layout.units[u].end());
  }
  return out;
}

void CheckMention(const EventQuery &q) {
  if (q.tokens.empty() || !q.mention.Within(q.tokens.size())) {
    throw DataError("query \"" + q.query_id + "\": mention span out of bounds");
  }
}

// Marked-mention unit plus single-token units, with optional argument
// groups collapsed into units.
Layout BuildLayout(const EventQuery &q, std::span<const Argument> args) {
  Layout layout;
  size_t i = 0;
  size_t next_arg = 0;
  while (i < q.tokens.size()) {
    if (i == q.mention.start) {
      TokenSeq unit{Token(Markers::kMentionStart)};
      for (size_t j = q.mention.start; j <= q.mention.end; ++j) unit.push_back(q.tokens[j]);
      unit.emplace_back(Markers::kMentionEnd);
      layout.mention = layout.units.size();
      layout.units.push_back(std::move(unit));
      i = q.mention.end + 1;
      continue;
    }
    if (next_arg < args.size() && args[next_arg].span.start == i) {
      const Argument &a = args[next_arg++];
      TokenSeq unit{Markers::LabelStart(a.role)};
      for (size_t j = a.span.start; j <= a.span.end; ++j) unit.push_back(q.tokens[j]);
      unit.push_back(Markers::LabelEnd(a.role));
      layout.units.push_back(std::move(unit));
      i = a.span.end + 1;
      continue;
    }
    layout.units.push_back({q.tokens[i]});
    ++i;
  }
  return layout;
}

}  // namespace

TokenSeq FormatBlink(const EventQuery &query, size_t max_len) {
  CheckMention(query);
  Layout layout = BuildLayout(query, {});
  return Flatten(layout, CenterUnits(layout, max_len));
}

TokenSeq FormatEvelink(const EventQuery &query,
                       std::span<const NamedEntityAnnotation> entities,
                       size_t max_len) {
  CheckMention(query);
  for (const auto &e : entities) {
    if (!e.span.Within(query.tokens.size())) {
      throw DataError("query \"" + query.query_id + "\": entity span out of bounds");
    }
  }
  if (max_len < 1) throw std::invalid_argument("max_len must leave room for [SEP]");
  Layout layout = BuildLayout(query, {});
  TokenSeq out = Flatten(layout, CenterUnits(layout, max_len - 1));
  out.emplace_back(Markers::kSep);

  std::vector<NamedEntityAnnotation> ordered(entities.begin(), entities.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const NamedEntityAnnotation &a, const NamedEntityAnnotation &b) {
                     if (a.span.start != b.span.start) return a.span.start < b.span.start;
                     return a.span.end < b.span.end;
                   });
  for (const auto &e : ordered) {
    size_t group = e.span.length() + 2;
    if (out.size() + group > max_len) break;
    out.push_back(Markers::LabelStart(e.entity_type));
    for (size_t j = e.span.start; j <= e.span.end; ++j) out.push_back(query.tokens[j]);
    out.push_back(Markers::LabelEnd(e.entity_type));
  }
  return out;
}

TokenSeq FormatArguments(const TaggedQuery &query, size_t max_len) {
  CheckMention(query.base);
  ValidateTagged(query);
  Layout layout = BuildLayout(query.base, query.arguments);
  return Flatten(layout, CenterUnits(layout, max_len));
}

TokenSeq FormatQuery(const TaggedQuery &query, FormatStyle style, size_t max_len) {
  switch (style) {
    case FormatStyle::kBlink: return FormatBlink(query.base, max_len);
    case FormatStyle::kEvelink:
      return FormatEvelink(query.base, query.base.entities, max_len);
    case FormatStyle::kArguments: break;
  }
  return FormatArguments(query, max_len);
}

TokenSeq StripMarkers(std::span<const Token> seq) {
  TokenSeq out;
  out.reserve(seq.size());
  for (const auto &t : seq) {
    if (!IsMarker(t)) out.push_back(t);
  }
  return out;
}

Span CenteredWindow(size_t num_tokens, Span mention, size_t width) {
  if (width == 0 || !mention.Within(num_tokens)) {
    throw std::invalid_argument("bad window request");
  }
  if (mention.length() >= width) return {mention.start, mention.start + width - 1};
  Layout layout;
  for (size_t i = 0; i < num_tokens;) {
    if (i == mention.start) {
      layout.mention = layout.units.size();
      layout.units.emplace_back(mention.length());
      i = mention.end + 1;
    } else {
      layout.units.emplace_back(1);
      ++i;
    }
  }
  auto [first, last] = CenterUnits(layout, width);
  // Units left of the mention are single tokens, so unit and token indices
  // agree up to the mention.
  size_t start = first;
  size_t end = last <= layout.mention ? mention.end
                                      : mention.end + (last - layout.mention);
  return {start, end};
}

}  // namespace evlink
