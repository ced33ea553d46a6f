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

#include "evlink/tokens.h"

#include <array>
#include <cctype>
#include <stdexcept>

namespace evlink {
namespace {

constexpr std::array<std::string_view, 6> kCoreMarkers = {
    Markers::kMentionStart, Markers::kMentionEnd, Markers::kSep,
    Markers::kTitleSep,     Markers::kNil,        Markers::kUnknown};

std::string SanitizeLabel(std::string_view label) {
  if (label.empty()) throw std::invalid_argument("empty marker label");
  std::string out(label);
  for (char &c : out) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '[' || c == ']') {
      c = '_';
    }
  }
  if (out == "M") {
    throw std::invalid_argument("label \"M\" collides with mention markers");
  }
  return out;
}

bool HasLabelSuffix(std::string_view token, char kind) {
  // Shortest label marker is "[x_s]".
  return token.size() >= 5 && token.front() == '[' && token.back() == ']' &&
         token[token.size() - 2] == kind && token[token.size() - 3] == '_';
}

}  // namespace

Token Markers::LabelStart(std::string_view label) {
  return "[" + SanitizeLabel(label) + "_s]";
}

Token Markers::LabelEnd(std::string_view label) {
  return "[" + SanitizeLabel(label) + "_e]";
}

bool Markers::IsLabelStart(std::string_view token) {
  return HasLabelSuffix(token, 's') && token != kMentionStart;
}

bool Markers::IsLabelEnd(std::string_view token) {
  return HasLabelSuffix(token, 'e') && token != kMentionEnd;
}

std::string Markers::LabelOf(std::string_view marker) {
  if (!IsLabelStart(marker) && !IsLabelEnd(marker)) return {};
  return std::string(marker.substr(1, marker.size() - 4));
}

bool IsMarker(std::string_view token) {
  for (auto m : kCoreMarkers) {
    if (token == m) return true;
  }
  return HasLabelSuffix(token, 's') || HasLabelSuffix(token, 'e');
}

Token EscapeCorpusToken(std::string_view token) {
  if (IsMarker(token)) return "\\" + std::string(token);
  return Token(token);
}

TokenSeq Tokenize(std::string_view text) {
  TokenSeq out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(EscapeCorpusToken(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string Join(std::span<const Token> tokens, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string AsciiLower(std::string_view s) {
  std::string out(s);
  for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

uint64_t Fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace evlink
