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

#ifndef EVLINK_TOKENS_H_
#define EVLINK_TOKENS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evlink {

using Token = std::string;
using TokenSeq = std::vector<Token>;

// Atomic marker tokens shared by every serialization in the library.
// Marker tokens are bracketed; corpus tokens that happen to look like a
// marker are escaped with a leading backslash when they enter the system
// (see EscapeCorpusToken), so a marker never collides with text.
struct Markers {
  static constexpr std::string_view kMentionStart = "[M_s]";
  static constexpr std::string_view kMentionEnd = "[M_e]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kTitleSep = "[TITLE_SEP]";
  static constexpr std::string_view kNil = "[NIL]";
  static constexpr std::string_view kUnknown = "[UNK]";

  // Paired markers for a role or entity-type label, e.g. "Victim" yields
  // "[Victim_s]" and "[Victim_e]". Whitespace and brackets inside the label
  // are replaced by '_'. Throws std::invalid_argument for an empty label or
  // one that would collide with the mention markers.
  static Token LabelStart(std::string_view label);
  static Token LabelEnd(std::string_view label);

  // Returns the label of a paired label marker, or an empty string.
  static std::string LabelOf(std::string_view marker);
  static bool IsLabelStart(std::string_view token);
  static bool IsLabelEnd(std::string_view token);
};

// True for any token produced by Markers (core or label markers).
bool IsMarker(std::string_view token);

// Corpus tokens with marker syntax get a backslash prefix.
Token EscapeCorpusToken(std::string_view token);

// Splits on ASCII whitespace and escapes marker-shaped tokens.
TokenSeq Tokenize(std::string_view text);

// Joins tokens with single spaces.
std::string Join(std::span<const Token> tokens, std::string_view sep = " ");

std::string AsciiLower(std::string_view s);

// Stable 64-bit FNV-1a hash over the UTF-8 bytes of s.
uint64_t Fnv1a64(std::string_view s);

}  // namespace evlink

#endif  // EVLINK_TOKENS_H_
