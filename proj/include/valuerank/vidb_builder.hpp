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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "valuerank/calibration.hpp"
#include "valuerank/judge.hpp"
#include "valuerank/ranking.hpp"
#include "valuerank/vidb.hpp"

namespace valuerank {

struct SeedPoolConfig {
  std::string target_value;
  std::size_t pool_size = 10000;
  std::size_t window_size = 2;
  std::size_t repetitions = 30;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct CorpusRecord {
  std::string text;
  std::optional<std::string> assigned_value;
  int direction_label = 0;
  std::string source;
  /// Ground-truth utility for synthetic corpora; drives simulated judges.
  std::optional<double> planted_utility;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

std::vector<CorpusRecord> parse_corpus(const std::string& jsonl_text);
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);
std::string serialize_corpus(std::span<const CorpusRecord> records);

struct SeedPoolReport {
  std::size_t duplicates_removed = 0;
  std::size_t matched = 0;
  std::size_t sampled = 0;
  std::size_t dropped_for_balance = 0;
};

/// Deduplicates, keeps every record of the target value, fills with a seeded
/// uniform sample up to the pool size and balances the two direction signs.
std::vector<CorpusRecord> build_seed_pool(std::span<const CorpusRecord> corpus,
                                          const SeedPoolConfig& config,
                                          SeedPoolReport* report = nullptr);

/// Prompt text shared by every window of one build.
struct WindowContext {
  std::string value_name;
  std::string value_definition;
  std::string theory_name = "a value theory";
  std::string label_name = "Value";
  /// Binary for two-text windows and Default otherwise when unset.
  std::optional<PromptFormat> format;
};

/// m windows per focal text, window_index = focal_position * m + repetition.
std::vector<IndexedWindow> generate_windows(std::span<const CorpusRecord> pool,
                                            const SeedPoolConfig& config,
                                            const WindowContext& context);

/// Fits PL over all observations and calibrates. Entries follow pool order and
/// skip pool texts that no surviving window mentions.
std::vector<VidbEntry> aggregate_to_db(std::span<const RankingObservation> observations,
                                       std::span<const CorpusRecord> pool,
                                       const std::string& value, const std::string& theory,
                                       const FitConfig& fit, const CalibrationMethod& method,
                                       FitReport* fit_report = nullptr);

inline constexpr int kFlagVoteThreshold = 2;
inline constexpr int kMaxAbstentions = 3;

struct AbstentionEvent {
  ItemId item_id;
  std::string judge_id;
  std::string reason;
};

struct TriageResult {
  std::vector<VidbEntry> entries;
  std::vector<AbstentionEvent> abstentions;
};

/// Asks every panel judge whether each calibrated score is plausible.
TriageResult triage_flags(std::span<const VidbEntry> entries, std::span<Judge* const> panel,
                          const std::string& value_definition);

/// Averages each item's human ratings and blends them into flagged entries.
/// Ratings for unknown or unflagged items raise.
std::vector<VidbEntry> apply_human_ratings(std::vector<VidbEntry> entries,
                                           const std::map<ItemId, std::vector<double>>& ratings);

struct BuildConfig {
  SeedPoolConfig pool;
  WindowContext context;
  FitConfig fit;
  CalibrationMethod calibration;
  std::string theory;
};

struct BuildResult {
  std::vector<VidbEntry> entries;
  SeedPoolReport pool_report;
  std::size_t pool_records = 0;
  std::size_t windows = 0;
  std::vector<DiscardEvent> discards;
  std::vector<AbstentionEvent> abstentions;
  int fit_epochs = 0;
  bool fit_converged = false;
};

/// Seed pool, windows, judging, aggregation and (with a nonempty panel) triage.
BuildResult build_vidb(std::span<const CorpusRecord> corpus, const BuildConfig& config,
                       std::span<Judge* const> rankers, std::span<Judge* const> panel);

/// Ground truth for simulated judges from a corpus with planted utilities.
SimulatedTruth truth_from_corpus(std::span<const CorpusRecord> corpus, const std::string& value);

}  // namespace valuerank
