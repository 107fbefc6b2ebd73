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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valuerank/jsonl.hpp"
#include "valuerank/ranking.hpp"

namespace valuerank {

/// Weight of the mean human rating in the flagged-item blend.
inline constexpr double kHumanBlendWeight = 0.5;

/// One row of the value-intensity database.
struct VidbEntry {
  ItemId item_id;
  std::string value;
  std::string theory;
  std::string text;
  double raw_utility = 0.0;
  double calibrated_score = 0.0;
  bool flagged = false;
  int flag_votes = 0;
  std::optional<double> human_rating;
  double final_score = 0.0;
  int n_windows = 0;

  friend bool operator==(const VidbEntry&, const VidbEntry&) = default;
};

/// Stable id: content hash of the value name and the text.
ItemId make_item_id(std::string_view text, std::string_view value);

/// (1 - w) * calibrated + w * human, clipped to [-10, 10].
double blended_score(double calibrated, double human_rating);

/// Records a (mean) human rating on a flagged entry and recomputes its final
/// score. Throws ProtocolViolation for unflagged entries and InvalidArgument
/// for ratings outside [-10, 10].
VidbEntry blend_human(VidbEntry entry, double human_rating);

/// Throws SchemaError(line, field) on the first violated invariant.
void validate_entry(const VidbEntry& entry, std::size_t line = 0);

nlohmann::ordered_json entry_to_json(const VidbEntry& entry);
/// Strict conversion: every field must be present with the right type.
VidbEntry entry_from_json(const nlohmann::json& j, std::size_t line);

std::string serialize_db(std::span<const VidbEntry> entries);
std::vector<VidbEntry> parse_db(const std::string& text);

void write_db(const std::filesystem::path& path, std::span<const VidbEntry> entries,
              const io::BeforeRename& before_rename = {});
std::vector<VidbEntry> read_db(const std::filesystem::path& path);

}  // namespace valuerank
