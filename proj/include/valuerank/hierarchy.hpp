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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valuerank/judge.hpp"

namespace valuerank {

struct HierarchyNode {
  std::string name;
  std::string definition;
  std::vector<HierarchyNode> children;
};

/// A theory's labeled tree. `nodes` holds the level-1 categories.
struct ValueHierarchy {
  std::string theory;
  std::string description;
  std::vector<HierarchyNode> nodes;

  std::size_t depth() const;
  /// Sibling names unique, names nonempty, depth 1 to 3.
  void validate() const;
  /// Node at the end of a root-descending path, or nullptr.
  const HierarchyNode* find(std::span<const std::string> path) const;
  /// Candidates below a path: the level-1 nodes for an empty path.
  const std::vector<HierarchyNode>* children_of(std::span<const std::string> path) const;
  bool is_valid_path(std::span<const std::string> path) const;
  /// Every root-descending path ending at a node called `name`.
  std::vector<std::vector<std::string>> paths_to(std::string_view name) const;
};

ValueHierarchy parse_hierarchy(const std::string& json_text);
ValueHierarchy load_hierarchy(const std::filesystem::path& path);
std::string hierarchy_to_json(const ValueHierarchy& hierarchy);

/// Shipped theories: "svt", "mft", "duty", "rights".
std::vector<std::string> builtin_theories();
ValueHierarchy builtin_hierarchy(std::string_view theory);
/// A built-in name or a path to a hierarchy file.
ValueHierarchy resolve_hierarchy(const std::string& theory_or_path);

struct VoteTally {
  std::map<std::string, int> votes;
  int total_voters = 7;
  bool includes_neutral = false;

  void validate() const;
};

enum class RoundOutcome { Accept, Reprompt, NeutralStop, NeedsHuman };

struct RoundDecision {
  RoundOutcome outcome = RoundOutcome::Reprompt;
  std::string category;  ///< Set for Accept.

  friend bool operator==(const RoundDecision&, const RoundDecision&) = default;
};

inline constexpr int kAcceptVotes = 5;
inline constexpr int kAcceptMargin = 2;

/// One consensus round. Neutral votes never count toward the margin.
RoundDecision decide_round(const VoteTally& tally);

std::string_view to_string(RoundOutcome outcome);

enum class LabelStatus { Resolved, Neutral, NeedsHuman };
std::string_view to_string(LabelStatus status);

struct RoundRecord {
  std::size_t level = 0;  ///< 1-based level being decided.
  VoteTally tally;
  RoundDecision decision;
};

struct LabelPath {
  std::string theory;
  std::vector<std::string> path;
  LabelStatus status = LabelStatus::Resolved;
  std::optional<int> direction;
  std::vector<RoundRecord> rounds;
  int abstentions = 0;
};

/// Descends the hierarchy one consensus round (or two) per level.
LabelPath map_text(const std::string& text, const ValueHierarchy& hierarchy,
                   std::span<Judge* const> panel);

struct DirectionResult {
  std::optional<int> direction;  ///< Unset means unresolved.
  bool backed_off = false;
  std::vector<int> votes;        ///< Votes of the deciding round.
  std::vector<std::string> value_path;
  int abstentions = 0;
};

/// Median of the panel's direction votes and the high-dispersion test.
struct DirectionVote {
  int median = 0;
  bool dispersed = false;
};
DirectionVote summarize_direction_votes(std::span<const int> votes);

/// Votes on the value at `value_path`, backing off once to its parent when the
/// votes are dispersed.
DirectionResult classify_direction(const std::string& text, const ValueHierarchy& hierarchy,
                                   std::span<const std::string> value_path,
                                   std::span<Judge* const> panel);

}  // namespace valuerank
