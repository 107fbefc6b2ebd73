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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valuerank/calibration.hpp"
#include "valuerank/judge.hpp"
#include "valuerank/ranking.hpp"

namespace valuerank {

enum class InstabilityMode { Rating, Ranking };
std::string_view to_string(InstabilityMode mode);
InstabilityMode parse_instability_mode(std::string_view name);

struct InstabilityItem {
  ItemId id;
  std::string text;
  std::string value;
  std::string value_definition;
  /// Reference intensity (e.g. a human label); its sign drives sign accuracy.
  std::optional<double> reference;
  /// Ground truth for simulated judges.
  std::optional<double> planted_utility;
};

/// Line-delimited {text, value[, id, definition, reference, planted_utility]}. Ids default to
/// the content hash used by the DB.
std::vector<InstabilityItem> parse_instability_items(const std::string& jsonl_text);
std::vector<InstabilityItem> read_instability_items(const std::filesystem::path& path);

struct InstabilityConfig {
  InstabilityMode mode = InstabilityMode::Rating;
  /// Ranking mode: windows per item and window size.
  std::size_t repetitions = 30;
  std::size_t window_size = 2;
  FitConfig fit;
  CalibrationMethod calibration;
  std::uint64_t rng_seed = 0;
};

struct InstabilityReport {
  InstabilityMode mode = InstabilityMode::Rating;
  std::size_t items = 0;
  std::size_t judges = 0;
  /// scores[i][j]: judge j's score for item i on [-10, 10].
  std::vector<std::vector<double>> scores;
  double mean_variance = 0.0;
  double mean_max_range = 0.0;
  /// Share of items scored positive by one judge and negative by another.
  double sign_flip_rate = 0.0;
  /// Sign of the judge-mean score against the reference sign.
  std::optional<double> sign_accuracy;
  /// Order of judge-mean scores against the reference order, over pairs with
  /// distinct references.
  std::optional<double> pairwise_accuracy;
};

/// Rating mode asks each judge for a scalar per item. Ranking mode has each
/// judge rank pairwise windows per value, then fits and calibrates per judge.
InstabilityReport compare_instability(std::span<const InstabilityItem> items,
                                      std::span<Judge* const> judges,
                                      const InstabilityConfig& config);

/// Metrics over a precomputed items x judges score matrix.
InstabilityReport summarize_scores(std::vector<std::vector<double>> scores,
                                   std::span<const InstabilityItem> items, InstabilityMode mode);

}  // namespace valuerank
