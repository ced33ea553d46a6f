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

#include "evlink/io.h"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "evlink/errors.h"

namespace evlink {
namespace io {

std::string ReadFile(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFileAtomic(const std::filesystem::path &path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw DataError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename " + tmp.string() + " to " + path.string() +
                    ": " + ec.message());
  }
}

std::string Sha256Hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  static const char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string FileDigest(const std::filesystem::path &path) {
  return Sha256Hex(ReadFile(path));
}

JsonlDocument ParseJsonl(std::string_view text, std::string_view source_name) {
  JsonlDocument doc;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error &e) {
      throw DataError(std::string(source_name) + ":" + std::to_string(line_no) +
                      ": malformed record: " + e.what());
    }
    if (!record.is_object()) {
      throw DataError(std::string(source_name) + ":" + std::to_string(line_no) +
                      ": record is not an object");
    }
    if (record.contains(kManifestKey)) {
      if (!doc.records.empty() || doc.manifest) {
        throw DataError(std::string(source_name) + ":" + std::to_string(line_no) +
                        ": manifest must be the first record");
      }
      doc.manifest = record[kManifestKey];
      continue;
    }
    doc.records.push_back(std::move(record));
    doc.lines.push_back(line_no);
  }
  return doc;
}

JsonlDocument ReadJsonl(const std::filesystem::path &path) {
  return ParseJsonl(ReadFile(path), path.string());
}

std::string DumpJsonl(const std::vector<Json> &records,
                      const std::optional<Json> &manifest) {
  std::string out;
  if (manifest) {
    out += Json{{kManifestKey, *manifest}}.dump();
    out += '\n';
  }
  for (const auto &r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

Json ReadJson(const std::filesystem::path &path) {
  std::string text = ReadFile(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
}

std::string DumpJson(const Json &doc) { return doc.dump(2) + "\n"; }

}  // namespace io
}  // namespace evlink
