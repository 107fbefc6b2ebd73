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

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace valuerank::io {

struct JsonLine {
  std::size_t line = 0;  ///< 1-based line number in the source.
  nlohmann::json value;
};

/// Parses line-delimited JSON; blank lines are skipped. Malformed lines raise
/// SchemaError naming the line.
std::vector<JsonLine> parse_jsonl(const std::string& text);
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

/// Hook run after the temporary file is complete and before it replaces the
/// target. Used to inject faults in tests.
using BeforeRename = std::function<void(const std::filesystem::path& temporary)>;

/// Writes `content` to a sibling temporary file, then renames it over `path`.
/// A failure at any point leaves the previous contents of `path` intact.
void write_text_atomic(const std::filesystem::path& path, const std::string& content,
                       const BeforeRename& before_rename = {});

}  // namespace valuerank::io
