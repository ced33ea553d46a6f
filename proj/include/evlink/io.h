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

#ifndef EVLINK_IO_H_
#define EVLINK_IO_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace evlink {

using Json = nlohmann::json;

namespace io {

// Key of the optional header record carrying a run manifest. A JSONL file
// may start with {"_manifest": {...}}; record readers skip it.
inline constexpr const char kManifestKey[] = "_manifest";

std::string ReadFile(const std::filesystem::path &path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written artifact.
void WriteFileAtomic(const std::filesystem::path &path, std::string_view content);

std::string Sha256Hex(std::string_view bytes);
std::string FileDigest(const std::filesystem::path &path);

struct JsonlDocument {
  std::optional<Json> manifest;
  std::vector<Json> records;
  // 1-based source line of each record, for error messages.
  std::vector<size_t> lines;
};

JsonlDocument ParseJsonl(std::string_view text, std::string_view source_name);
JsonlDocument ReadJsonl(const std::filesystem::path &path);
std::string DumpJsonl(const std::vector<Json> &records,
                      const std::optional<Json> &manifest = std::nullopt);

Json ReadJson(const std::filesystem::path &path);
std::string DumpJson(const Json &doc);

}  // namespace io
}  // namespace evlink

#endif  // EVLINK_IO_H_
