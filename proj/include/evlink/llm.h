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

#ifndef EVLINK_LLM_H_
#define EVLINK_LLM_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evlink/extraction.h"

namespace evlink {

// A text-completion backend. Implementations must tolerate concurrent calls
// (callers bound the number in flight). Transport problems are reported as
// TransportError.
class TextCompletionClient {
 public:
  virtual ~TextCompletionClient() = default;
  virtual std::string name() const = 0;
  virtual std::string Complete(const std::string &prompt) = 0;
};

// Wraps a callable; the basis of the deterministic mocks used in tests.
class ScriptedClient : public TextCompletionClient {
 public:
  using Script = std::function<std::string(const std::string &)>;
  explicit ScriptedClient(Script script, std::string name = "scripted")
      : script_(std::move(script)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::string Complete(const std::string &prompt) override { return script_(prompt); }

 private:
  Script script_;
  std::string name_;
};

// Pipes each prompt to a shell command on stdin and returns its stdout.
// A nonzero exit status is a TransportError.
class CommandClient : public TextCompletionClient {
 public:
  explicit CommandClient(std::string command) : command_(std::move(command)) {}
  std::string name() const override { return "command"; }
  std::string Complete(const std::string &prompt) override;

 private:
  std::string command_;
};

// Mock generator for negative-data prompts. It reads the last passage of the
// prompt and rewrites it: with role tags present every tagged argument is
// replaced (numbers are shifted, other spans get a name from the pool);
// without role tags, capitalized and numeric tokens outside the mention are
// replaced instead. Answers in the two-step format when the prompt asks for
// it, else as "New passage: ...". Deterministic in (pool, seed, prompt).
class ArgumentSwapClient : public TextCompletionClient {
 public:
  ArgumentSwapClient(std::vector<std::string> name_pool, uint64_t seed);
  std::string name() const override { return "mock-swap"; }
  std::string Complete(const std::string &prompt) override;

 private:
  std::string PickName(uint64_t key, std::string_view avoid) const;

  std::vector<std::string> pool_;
  uint64_t seed_;
};

// Mock re-ranker: answers with the prompt's documents in their given order.
class EchoRerankClient : public TextCompletionClient {
 public:
  std::string name() const override { return "mock-echo"; }
  std::string Complete(const std::string &prompt) override;
};

// Passage markup used in prompts: the mention as "<mention> ... </mention>"
// and each argument as "<Role> ... </Role>", tokens separated by spaces.
std::string RenderTaggedPassage(const EventQuery &query,
                                std::span<const Argument> arguments = {});

struct ParsedPassage {
  TokenSeq tokens;
  std::optional<Span> mention;
  int mention_open_tags = 0;
  int mention_close_tags = 0;
  std::vector<Argument> arguments;
  // False when any role tag is unclosed, unopened or crosses another tag.
  bool roles_balanced = true;

  bool HasIntactMention() const {
    return mention.has_value() && mention_open_tags == 1 && mention_close_tags == 1;
  }
};

ParsedPassage ParseTaggedPassage(std::string_view text);

std::string Trim(std::string_view s);

}  // namespace evlink

#endif  // EVLINK_LLM_H_
