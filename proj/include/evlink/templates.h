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

#ifndef EVLINK_TEMPLATES_H_
#define EVLINK_TEMPLATES_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace evlink {

// Fills a template with str.format-style placeholders: "{name}" (and "{}"
// under the empty key) are replaced, "{{" and "}}" produce literal braces.
// Substituted values are not re-scanned. Throws std::invalid_argument on an
// unknown placeholder or an unbalanced brace.
std::string FillTemplate(std::string_view tmpl,
                         const std::map<std::string, std::string> &values);

// Versioned directory of prompt template files (<name>.txt).
class PromptLibrary {
 public:
  explicit PromptLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {}

  // $EVLINK_PROMPT_DIR if set, else the templates shipped with the source
  // tree.
  static PromptLibrary Default();

  // Raw file contents. Throws DataError if the template is missing.
  std::string Get(std::string_view name) const;
  const std::filesystem::path &dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace evlink

#endif  // EVLINK_TEMPLATES_H_
