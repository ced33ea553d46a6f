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

#include "evlink/llm.h"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "evlink/errors.h"

namespace evlink {

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string CommandClient::Complete(const std::string &prompt) {
  char path[] = "/tmp/evlink-prompt-XXXXXX";
  int fd = mkstemp(path);
  if (fd < 0) throw TransportError("cannot create prompt file");
  {
    std::ofstream out(path, std::ios::binary);
    out << prompt;
  }
  close(fd);
  std::string cmd = command_ + " < '" + std::string(path) + "'";
  FILE *pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    std::filesystem::remove(path);
    throw TransportError("cannot start \"" + command_ + "\"");
  }
  std::string result;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.append(buf.data(), n);
  int status = pclose(pipe);
  std::filesystem::remove(path);
  if (status != 0) {
    throw TransportError("\"" + command_ + "\" exited with status " +
                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status));
  }
  return result;
}

namespace {

bool IsTagNameChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Parses "<name>" or "</name>" at text[i]; returns the tag length or 0.
size_t MatchTag(std::string_view text, size_t i, bool *closing, std::string *name) {
  if (text[i] != '<') return 0;
  size_t j = i + 1;
  *closing = j < text.size() && text[j] == '/';
  if (*closing) ++j;
  if (j >= text.size() || !std::isalpha(static_cast<unsigned char>(text[j]))) return 0;
  size_t k = j;
  while (k < text.size() && IsTagNameChar(text[k])) ++k;
  if (k >= text.size() || text[k] != '>') return 0;
  *name = std::string(text.substr(j, k - j));
  return k + 1 - i;
}

std::string TagName(std::string_view role) {
  std::string out(role);
  for (char &c : out) {
    if (!IsTagNameChar(c)) c = '_';
  }
  return out;
}

bool IsNumber(std::string_view s) {
  if (s.empty()) return false;
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

uint64_t Mix(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string RenderTaggedPassage(const EventQuery &query, std::span<const Argument> arguments) {
  std::string out;
  auto emit = [&](std::string_view piece) {
    if (!out.empty()) out.push_back(' ');
    out += piece;
  };
  for (size_t i = 0; i < query.tokens.size(); ++i) {
    for (const auto &a : arguments) {
      if (a.span.start == i) emit("<" + TagName(a.role) + ">");
    }
    if (i == query.mention.start) emit("<mention>");
    emit(query.tokens[i]);
    if (i == query.mention.end) emit("</mention>");
    for (const auto &a : arguments) {
      if (a.span.end == i) emit("</" + TagName(a.role) + ">");
    }
  }
  return out;
}

ParsedPassage ParseTaggedPassage(std::string_view text) {
  ParsedPassage out;
  struct Open {
    std::string name;
    size_t start;
  };
  std::vector<Open> stack;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.tokens.push_back(EscapeCorpusToken(word));
    word.clear();
  };
  for (size_t i = 0; i < text.size();) {
    bool closing = false;
    std::string name;
    if (size_t len = MatchTag(text, i, &closing, &name); len > 0) {
      flush();
      const bool is_mention = name == "mention";
      if (!closing) {
        if (is_mention) ++out.mention_open_tags;
        stack.push_back({name, out.tokens.size()});
      } else {
        if (is_mention) ++out.mention_close_tags;
        if (!stack.empty() && stack.back().name == name) {
          Open open = stack.back();
          stack.pop_back();
          if (out.tokens.size() > open.start) {
            Span span{open.start, out.tokens.size() - 1};
            if (is_mention) {
              if (!out.mention) out.mention = span;
            } else {
              out.arguments.push_back({span, name});
            }
          }
        } else if (!is_mention) {
          out.roles_balanced = false;
        }
      }
      i += len;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      flush();
    } else {
      word.push_back(text[i]);
    }
    ++i;
  }
  flush();
  for (const auto &open : stack) {
    if (open.name != "mention") out.roles_balanced = false;
  }
  std::sort(out.arguments.begin(), out.arguments.end(),
            [](const Argument &a, const Argument &b) { return a.span.start < b.span.start; });
  return out;
}

ArgumentSwapClient::ArgumentSwapClient(std::vector<std::string> name_pool, uint64_t seed)
    : pool_(std::move(name_pool)), seed_(seed) {
  if (pool_.size() < 2) throw std::invalid_argument("name pool needs at least two names");
}

std::string ArgumentSwapClient::PickName(uint64_t key, std::string_view avoid) const {
  size_t i = key % pool_.size();
  if (AsciiLower(pool_[i]) == AsciiLower(avoid)) i = (i + 1) % pool_.size();
  return pool_[i];
}

std::string ArgumentSwapClient::Complete(const std::string &prompt) {
  static constexpr std::string_view kPassage = "Example 3:\nPassage: ";
  size_t start = prompt.rfind(kPassage);
  if (start == std::string::npos) return "I cannot find a passage to rewrite.";
  start += kPassage.size();
  size_t end = prompt.find("\n\n", start);
  std::string passage = prompt.substr(start, end == std::string::npos ? std::string::npos
                                                                      : end - start);
  const bool two_step = prompt.find("Following Plan 2") != std::string::npos;
  const uint64_t base = Mix(seed_, Fnv1a64(passage));

  // Rebuild the passage piece by piece, keeping every tag in place.
  std::string out;
  auto emit = [&](std::string_view piece) {
    if (!out.empty()) out.push_back(' ');
    out += piece;
  };
  std::vector<std::string> pieces;
  {
    std::string word;
    for (size_t i = 0; i < passage.size();) {
      bool closing = false;
      std::string name;
      if (size_t len = MatchTag(passage, i, &closing, &name); len > 0) {
        if (!word.empty()) pieces.push_back(std::move(word));
        word.clear();
        pieces.push_back(passage.substr(i, len));
        i += len;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(passage[i]))) {
        if (!word.empty()) pieces.push_back(std::move(word));
        word.clear();
      } else {
        word.push_back(passage[i]);
      }
      ++i;
    }
    if (!word.empty()) pieces.push_back(std::move(word));
  }

  bool has_roles = false;
  for (const auto &p : pieces) {
    bool closing = false;
    std::string name;
    if (MatchTag(p, 0, &closing, &name) == p.size() && name != "mention") has_roles = true;
  }

  size_t replaced = 0;
  bool in_mention = false;
  std::string role;           // role tag currently open
  std::vector<std::string> span_words;
  auto replacement_for = [&](const std::vector<std::string> &words) {
    std::string joined;
    for (const auto &w : words) joined += (joined.empty() ? "" : " ") + w;
    uint64_t key = Mix(base, ++replaced);
    if (words.size() == 1 && IsNumber(words[0])) {
      long long v = std::stoll(words[0]);
      return std::to_string(v + 3 + static_cast<long long>(key % 40));
    }
    return PickName(key, joined);
  };

  for (size_t i = 0; i < pieces.size(); ++i) {
    const std::string &p = pieces[i];
    bool closing = false;
    std::string name;
    if (MatchTag(p, 0, &closing, &name) == p.size()) {
      if (name == "mention") {
        in_mention = !closing;
      } else if (!closing) {
        role = name;
        span_words.clear();
      } else if (name == role) {
        if (!span_words.empty()) emit(replacement_for(span_words));
        role.clear();
      }
      emit(p);
      continue;
    }
    if (!role.empty()) {
      span_words.push_back(p);
      continue;
    }
    if (!has_roles && !in_mention) {
      const bool sentence_initial = out.empty() || out.back() == '.';
      const bool capitalized = std::isupper(static_cast<unsigned char>(p[0])) != 0;
      if (IsNumber(p) || (capitalized && !sentence_initial)) {
        std::vector<std::string> run{p};
        while (i + 1 < pieces.size() && !IsNumber(p) &&
               std::isupper(static_cast<unsigned char>(pieces[i + 1][0]))) {
          run.push_back(pieces[++i]);
        }
        emit(replacement_for(run));
        continue;
      }
    }
    emit(p);
  }

  if (two_step) {
    return "Plan 1: Replace every tagged argument with an invented value of the same role.\n"
           "Following Plan 1, we can generate this passage after Step 1: " + out +
           "\nPlan 2: The rewritten passage already reads fluently, so keep it.\n"
           "Following Plan 2, we can generate this passage after Step 2: " + out;
  }
  return "New passage: " + out;
}

std::string EchoRerankClient::Complete(const std::string &prompt) {
  static constexpr std::string_view kInput = "Now, here is the actual input.\n";
  size_t start = prompt.rfind(kInput);
  std::string input = start == std::string::npos ? prompt : prompt.substr(start + kInput.size());
  std::string answer;
  size_t pos = 0;
  int rank = 0;
  while (pos < input.size()) {
    size_t eol = input.find('\n', pos);
    std::string line = input.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? input.size() : eol + 1;
    if (line.rfind("Document ", 0) != 0) continue;
    size_t colon = line.find(": ");
    if (colon == std::string::npos) continue;
    answer += "Document d" + std::to_string(++rank) + ": " + line.substr(colon + 2) + "\n";
  }
  return answer;
}

}  // namespace evlink
