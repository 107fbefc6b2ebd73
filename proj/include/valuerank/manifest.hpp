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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

namespace valuerank {

/// Record of one CLI run, written next to its primary output.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t rng_seed = 0;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::chrono::system_clock::time_point started_at = std::chrono::system_clock::now();
  std::chrono::system_clock::time_point finished_at{};
  std::map<std::string, std::int64_t> counters;
  std::string status = "ok";
  std::string error;

  nlohmann::ordered_json to_json() const;
};

/// `<output>.manifest.json`
std::filesystem::path manifest_path_for(const std::filesystem::path& output);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& output);

/// UTC, ISO 8601 with milliseconds.
std::string format_timestamp(std::chrono::system_clock::time_point t);

}  // namespace valuerank
