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

#include "evlink/templates.h"

#include <cstdlib>
#include <stdexcept>

#include "evlink/io.h"

namespace evlink {

std::string FillTemplate(std::string_view tmpl,
                         const std::map<std::string, std::string> &values) {
  std::string out;
  out.reserve(tmpl.size());
  for (size_t i = 0; i < tmpl.size(); ++i) {
    char c = tmpl[i];
    if (c == '{') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
        out.push_back('{');
        ++i;
        continue;
      }
      size_t close = tmpl.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw std::invalid_argument("unterminated placeholder at offset " + std::to_string(i));
      }
      std::string key(tmpl.substr(i + 1, close - i - 1));
      auto it = values.find(key);
      if (it == values.end()) {
        throw std::invalid_argument("no value for placeholder {" + key + "}");
      }
      out += it->second;
      i = close;
    } else if (c == '}') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
        out.push_back('}');
        ++i;
        continue;
      }
      throw std::invalid_argument("single '}' at offset " + std::to_string(i));
    } else {
      out.push_back(c);
    }
  }
  return out;
}

PromptLibrary PromptLibrary::Default() {
  if (const char *env = std::getenv("EVLINK_PROMPT_DIR"); env != nullptr && *env != '\0') {
    return PromptLibrary(env);
  }
  return PromptLibrary(std::filesystem::path(EVLINK_DEFAULT_PROMPT_DIR) / "v1");
}

std::string PromptLibrary::Get(std::string_view name) const {
  return io::ReadFile(dir_ / (std::string(name) + ".txt"));
}

}  // namespace evlink
