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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valuerank/calibration.hpp"
#include "valuerank/judge.hpp"
#include "valuerank/ranking.hpp"
#include "valuerank/rng.hpp"
#include "valuerank/vidb.hpp"

namespace valuerank {

enum class AnchorStrategy { Random, Bucketed, Fixed };

std::string_view to_string(AnchorStrategy strategy);
AnchorStrategy parse_anchor_strategy(std::string_view name);

struct EvalConfig {
  std::size_t window_size = 6;
  std::size_t iterations = 3;
  AnchorStrategy strategy = AnchorStrategy::Bucketed;
  double epsilon_below = 0.1;
  std::uint64_t rng_seed = 0;
  std::vector<ItemId> fixed_panel;
  /// Shown to the judge with every window.
  std::string value_definition;

  void validate() const;
};

struct IntensityEstimate {
  ItemId response_id;
  double intensity = 0.0;
  double raw_utility = 0.0;
  int windows_used = 0;
  double anchor_min = 0.0;
  double anchor_max = 0.0;
  bool clamped = false;
  bool below_all = false;
  std::vector<DiscardEvent> discards;
};

/// The DB entries of one value, the only ones an evaluation may use.
class AnchorPool {
 public:
  AnchorPool(std::span<const VidbEntry> db, std::string value);

  const std::string& value() const { return value_; }
  std::span<const VidbEntry> entries() const { return entries_; }
  const VidbEntry* find(const ItemId& id) const;

 private:
  std::string value_;
  std::vector<VidbEntry> entries_;  // ascending final_score
  std::map<ItemId, std::size_t> index_;
};

/// k-1 anchors for one window. Bucketed falls back to the entry nearest the
/// bin centre when a bin is empty and appends a note to `notes`.
std::vector<const VidbEntry*> sample_anchors(const AnchorPool& pool, const EvalConfig& config,
                                             Rng& rng, std::vector<std::string>* notes = nullptr);

/// Id under which a response is ranked against anchors.
ItemId response_item_id(std::string_view text);

/// Maximizes the PL log-likelihood over `free_item` alone, by golden-section
/// search on [kFreeLower, kFreeUpper].
inline constexpr double kFreeLower = -20.0;
inline constexpr double kFreeUpper = 20.0;
double pl_fit_single_free(std::span<const RankingObservation> rankings,
                          const CalibratedScores& pinned, const ItemId& free_item);

/// Applies the local-consistency rules to a 1-D fit over the given windows.
IntensityEstimate estimate_from_rankings(std::span<const RankingObservation> rankings,
                                         const AnchorPool& pool, const ItemId& response_id,
                                         const EvalConfig& config);

IntensityEstimate estimate_intensity(std::string_view response_text, const AnchorPool& pool,
                                     Judge& judge, const EvalConfig& config);
IntensityEstimate estimate_intensity(std::string_view response_text, const std::string& value,
                                     std::span<const VidbEntry> db, Judge& judge,
                                     const EvalConfig& config);

/// Estimates after the first m windows for every m in `prefixes`, sharing the
/// judge calls. Window i is the same regardless of how many follow it.
std::vector<IntensityEstimate> estimate_intensity_prefixes(std::string_view response_text,
                                                           const AnchorPool& pool, Judge& judge,
                                                           const EvalConfig& config,
                                                           std::span<const std::size_t> prefixes);

struct SteeringGain {
  double delta = 0.0;
  IntensityEstimate default_estimate;
  IntensityEstimate steered_estimate;
};

SteeringGain steering_gain(std::string_view default_text, std::string_view steered_text,
                           const AnchorPool& pool, Judge& judge, const EvalConfig& config);

struct EvaluationRequest {
  std::string id;
  std::string text;
  std::string value;
};

struct EvaluationOutcome {
  std::string id;
  std::string value;
  std::optional<IntensityEstimate> estimate;
  std::string error;  ///< Set when the evaluation failed.
};

/// Evaluates requests in parallel; failures are reported, not thrown.
std::vector<EvaluationOutcome> evaluate_batch(std::span<const EvaluationRequest> requests,
                                              std::span<const VidbEntry> db, Judge& judge,
                                              const EvalConfig& config);

}  // namespace valuerank
