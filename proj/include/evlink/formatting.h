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

#ifndef EVLINK_FORMATTING_H_
#define EVLINK_FORMATTING_H_

#include <span>
#include <string_view>

#include "evlink/extraction.h"
#include "evlink/tokens.h"

namespace evlink {

// Query serializations:
//   kBlink      x_1 .. [M_s] x_eve [M_e] .. x_l
//   kEvelink    blink window, [SEP], then [T_s] ne_j [T_e] per entity
//   kArguments  blink with every argument wrapped in [Role_s] .. [Role_e]
enum class FormatStyle { kBlink, kEvelink, kArguments };

std::string_view StyleName(FormatStyle style);
// Accepts "blink", "evelink" and "args" (or "arguments").
FormatStyle ParseStyle(std::string_view name);

// All formatters keep the marked mention and truncate context to fit
// max_len with a mention-centered window: context units are added one at a
// time to whichever side currently holds fewer output tokens (the left side
// on ties) until the next unit on a side no longer fits, which closes that
// side. Argument groups are single units, so they are never split and the
// group reached last is the first one dropped.
//
// Throw DataError when a span lies outside the query and
// std::invalid_argument when max_len cannot hold the marked mention.
TokenSeq FormatBlink(const EventQuery &query, size_t max_len);
// The token window gets max_len - 1 tokens, then [SEP], then entity groups in
// document order for as long as they fit.
TokenSeq FormatEvelink(const EventQuery &query,
                       std::span<const NamedEntityAnnotation> entities,
                       size_t max_len);
TokenSeq FormatArguments(const TaggedQuery &query, size_t max_len);

// Dispatches on style; kEvelink reads the query's own entity annotations.
TokenSeq FormatQuery(const TaggedQuery &query, FormatStyle style, size_t max_len);

TokenSeq StripMarkers(std::span<const Token> seq);

// The width-token window of plain query tokens around the mention, chosen by
// the same centering rule. A mention longer than width is cut to its first
// width tokens.
Span CenteredWindow(size_t num_tokens, Span mention, size_t width);

}  // namespace evlink

#endif  // EVLINK_FORMATTING_H_
