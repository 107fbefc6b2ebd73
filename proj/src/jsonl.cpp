// Copyright 2026 The Valuerank Authors.
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

#include "valuerank/jsonl.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "valuerank/errors.hpp"
#include "valuerank/prompts.hpp"

namespace valuerank::io {

std::vector<JsonLine> parse_jsonl(const std::string& text) {
  std::vector<JsonLine> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      out.push_back({number, nlohmann::json::parse(line)});
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(number, "<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!out.back().value.is_object()) throw SchemaError(number, "<record>", "expected an object");
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<JsonLine> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_text(path));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content,
                       const BeforeRename& before_rename) {
  std::filesystem::path temporary = path;
  temporary += ".tmp";
  {
    std::ofstream out(temporary, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + temporary.string());
    out << content;
    out.flush();
    if (!out) throw InvalidArgument("short write to " + temporary.string());
  }
  try {
    if (before_rename) before_rename(temporary);
    std::filesystem::rename(temporary, path);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(temporary, ignored);
    throw;
  }
}

}  // namespace valuerank::io
