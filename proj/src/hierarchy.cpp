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

#include "valuerank/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/jsonl.hpp"
#include "valuerank/stats.hpp"

#ifndef VALUERANK_ASSET_DIR
#define VALUERANK_ASSET_DIR "assets"
#endif

namespace valuerank {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxDepth = 3;

std::size_t node_depth(const HierarchyNode& node) {
  std::size_t d = 0;
  for (const auto& c : node.children) d = std::max(d, node_depth(c));
  return d + 1;
}

void validate_siblings(const std::vector<HierarchyNode>& nodes, const std::string& where) {
  std::set<std::string> names;
  for (const auto& n : nodes) {
    if (n.name.empty()) throw InvalidArgument("unnamed node under " + where);
    if (n.name == kNeutralCategory) throw InvalidArgument("reserved node name: " + n.name);
    if (!names.insert(n.name).second) {
      throw InvalidArgument("duplicate sibling '" + n.name + "' under " + where);
    }
    validate_siblings(n.children, n.name);
  }
}

HierarchyNode node_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("hierarchy node must be an object");
  HierarchyNode n;
  n.name = j.at("name").get<std::string>();
  n.definition = j.value("definition", std::string());
  if (auto c = j.find("children"); c != j.end()) {
    for (const auto& child : *c) n.children.push_back(node_from_json(child));
  }
  return n;
}

json node_to_json(const HierarchyNode& n) {
  json children = json::array();
  for (const auto& c : n.children) children.push_back(node_to_json(c));
  return {{"name", n.name}, {"definition", n.definition}, {"children", children}};
}

void collect_paths(const std::vector<HierarchyNode>& nodes, std::string_view name,
                   std::vector<std::string>& prefix, std::vector<std::vector<std::string>>& out) {
  for (const auto& n : nodes) {
    prefix.push_back(n.name);
    if (n.name == name) out.push_back(prefix);
    collect_paths(n.children, name, prefix, out);
    prefix.pop_back();
  }
}

/// Asks every panel judge in parallel; failed or out-of-vocabulary replies abstain.
VoteTally poll_panel(const CategoryPrompt& prompt, std::span<Judge* const> panel,
                     int& abstentions) {
  std::vector<std::optional<std::string>> replies(panel.size());
  parallel_for(panel.size(), panel.size(), [&](std::size_t i) {
    try {
      replies[i] = panel[i]->categorize(prompt);
    } catch (const Error&) {
    }
  });
  VoteTally tally;
  tally.total_voters = static_cast<int>(panel.size());
  tally.includes_neutral = prompt.offer_neutral;
  for (const auto& c : prompt.children) tally.votes[c] = 0;
  if (prompt.offer_neutral) tally.votes[std::string(kNeutralCategory)] = 0;
  for (const auto& r : replies) {
    auto it = r ? tally.votes.find(*r) : tally.votes.end();
    if (it == tally.votes.end()) {
      ++abstentions;
    } else {
      ++it->second;
    }
  }
  return tally;
}

}  // namespace

std::size_t ValueHierarchy::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, node_depth(n));
  return d;
}

void ValueHierarchy::validate() const {
  if (theory.empty()) throw InvalidArgument("hierarchy without a theory name");
  if (nodes.empty()) throw InvalidArgument("hierarchy '" + theory + "' has no nodes");
  if (depth() > kMaxDepth) throw InvalidArgument("hierarchy '" + theory + "' deeper than 3");
  validate_siblings(nodes, theory);
}

const std::vector<HierarchyNode>* ValueHierarchy::children_of(
    std::span<const std::string> path) const {
  const std::vector<HierarchyNode>* level = &nodes;
  for (const auto& name : path) {
    auto it = std::find_if(level->begin(), level->end(),
                           [&](const HierarchyNode& n) { return n.name == name; });
    if (it == level->end()) return nullptr;
    level = &it->children;
  }
  return level;
}

const HierarchyNode* ValueHierarchy::find(std::span<const std::string> path) const {
  if (path.empty()) return nullptr;
  const auto* level = children_of(path.first(path.size() - 1));
  if (!level) return nullptr;
  auto it = std::find_if(level->begin(), level->end(),
                         [&](const HierarchyNode& n) { return n.name == path.back(); });
  return it == level->end() ? nullptr : &*it;
}

bool ValueHierarchy::is_valid_path(std::span<const std::string> path) const {
  return path.empty() || find(path) != nullptr;
}

std::vector<std::vector<std::string>> ValueHierarchy::paths_to(std::string_view name) const {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> prefix;
  collect_paths(nodes, name, prefix, out);
  return out;
}

ValueHierarchy parse_hierarchy(const std::string& json_text) {
  ValueHierarchy h;
  try {
    const json j = json::parse(json_text);
    h.theory = j.at("theory").get<std::string>();
    h.description = j.value("description", std::string());
    for (const auto& n : j.at("nodes")) h.nodes.push_back(node_from_json(n));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("invalid hierarchy document: ") + e.what());
  }
  h.validate();
  return h;
}

ValueHierarchy load_hierarchy(const std::filesystem::path& path) {
  return parse_hierarchy(io::read_text(path));
}

std::string hierarchy_to_json(const ValueHierarchy& h) {
  json nodes = json::array();
  for (const auto& n : h.nodes) nodes.push_back(node_to_json(n));
  return json{{"theory", h.theory}, {"description", h.description}, {"nodes", nodes}}.dump(2);
}

std::vector<std::string> builtin_theories() { return {"svt", "mft", "duty", "rights"}; }

ValueHierarchy builtin_hierarchy(std::string_view theory) {
  const auto names = builtin_theories();
  if (std::find(names.begin(), names.end(), theory) == names.end()) {
    throw InvalidArgument("unknown built-in theory: " + std::string(theory));
  }
  const std::filesystem::path dir = VALUERANK_ASSET_DIR;
  return load_hierarchy(dir / "hierarchies" / (std::string(theory) + ".json"));
}

ValueHierarchy resolve_hierarchy(const std::string& theory_or_path) {
  const auto names = builtin_theories();
  if (std::find(names.begin(), names.end(), theory_or_path) != names.end()) {
    return builtin_hierarchy(theory_or_path);
  }
  return load_hierarchy(theory_or_path);
}

void VoteTally::validate() const {
  if (total_voters < 1) throw InvalidArgument("total_voters must be >= 1");
  int sum = 0;
  for (const auto& [name, v] : votes) {
    if (v < 0) throw InvalidArgument("negative vote count for " + name);
    if (name == kNeutralCategory && !includes_neutral) {
      throw InvalidArgument("Neutral votes in a round without the Neutral option");
    }
    sum += v;
  }
  if (sum > total_voters) throw InvalidArgument("more votes than voters");
}

RoundDecision decide_round(const VoteTally& tally) {
  tally.validate();
  int neutral = 0;
  std::vector<std::pair<int, std::string>> ranked;
  for (const auto& [name, v] : tally.votes) {
    if (tally.includes_neutral && name == kNeutralCategory) {
      neutral = v;
    } else {
      ranked.emplace_back(v, name);
    }
  }
  if (tally.includes_neutral && 2 * neutral > tally.total_voters) {
    return {RoundOutcome::NeutralStop, {}};
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const int leader = ranked.empty() ? 0 : ranked[0].first;
  const int runner_up = ranked.size() < 2 ? 0 : ranked[1].first;
  if (leader > runner_up && (leader >= kAcceptVotes || leader - runner_up >= kAcceptMargin)) {
    return {RoundOutcome::Accept, ranked[0].second};
  }
  return {tally.includes_neutral ? RoundOutcome::NeedsHuman : RoundOutcome::Reprompt, {}};
}

std::string_view to_string(RoundOutcome outcome) {
  switch (outcome) {
    case RoundOutcome::Accept: return "accept";
    case RoundOutcome::Reprompt: return "reprompt";
    case RoundOutcome::NeutralStop: return "neutral_stop";
    case RoundOutcome::NeedsHuman: return "needs_human";
  }
  return "?";
}

std::string_view to_string(LabelStatus status) {
  switch (status) {
    case LabelStatus::Resolved: return "resolved";
    case LabelStatus::Neutral: return "neutral";
    case LabelStatus::NeedsHuman: return "needs_human";
  }
  return "?";
}

LabelPath map_text(const std::string& text, const ValueHierarchy& hierarchy,
                   std::span<Judge* const> panel) {
  if (panel.empty()) throw InvalidArgument("empty labeling panel");
  LabelPath out;
  out.theory = hierarchy.theory;
  while (true) {
    const auto* children = hierarchy.children_of(out.path);
    if (!children) throw InvalidArgument("path left the hierarchy");
    if (children->empty()) {
      out.status = LabelStatus::Resolved;
      return out;
    }
    CategoryPrompt prompt;
    if (out.path.empty()) {
      prompt.parent = hierarchy.theory;
      prompt.parent_definition = hierarchy.description;
    } else {
      const HierarchyNode* node = hierarchy.find(out.path);
      prompt.parent = node->name;
      prompt.parent_definition = node->definition;
    }
    for (const auto& c : *children) prompt.children.push_back(c.name);
    prompt.text = text;

    const std::size_t level = out.path.size() + 1;
    VoteTally tally = poll_panel(prompt, panel, out.abstentions);
    RoundDecision decision = decide_round(tally);
    out.rounds.push_back({level, tally, decision});
    if (decision.outcome == RoundOutcome::Reprompt) {
      prompt.offer_neutral = true;
      tally = poll_panel(prompt, panel, out.abstentions);
      decision = decide_round(tally);
      out.rounds.push_back({level, tally, decision});
    }
    switch (decision.outcome) {
      case RoundOutcome::Accept:
        out.path.push_back(decision.category);
        break;
      case RoundOutcome::NeutralStop:
        out.status = LabelStatus::Neutral;
        return out;
      case RoundOutcome::NeedsHuman:
      case RoundOutcome::Reprompt:
        out.status = LabelStatus::NeedsHuman;
        return out;
    }
  }
}

DirectionVote summarize_direction_votes(std::span<const int> votes) {
  if (votes.empty()) return {0, true};
  std::vector<double> xs(votes.begin(), votes.end());
  DirectionVote out;
  // Even panels can land between two labels; such medians round toward 0.
  out.median = static_cast<int>(std::trunc(stats::median(xs)));
  const double iqr = stats::quantile(xs, 0.75) - stats::quantile(xs, 0.25);
  const auto count = [&](int v) { return std::count(votes.begin(), votes.end(), v); };
  const auto opposed = count(-1);
  const auto supports = count(+1);
  const auto unrelated = count(0);
  const bool split = opposed >= 2 && supports >= 2 && opposed >= unrelated && supports >= unrelated;
  out.dispersed = iqr >= 2.0 || split;
  return out;
}

DirectionResult classify_direction(const std::string& text, const ValueHierarchy& hierarchy,
                                   std::span<const std::string> value_path,
                                   std::span<Judge* const> panel) {
  if (panel.empty()) throw InvalidArgument("empty direction panel");
  if (value_path.empty() || !hierarchy.find(value_path)) {
    throw InvalidArgument("value path is not in the hierarchy");
  }
  DirectionResult out;
  std::vector<std::string> path(value_path.begin(), value_path.end());
  while (true) {
    const HierarchyNode* node = hierarchy.find(path);
    DirectionPrompt prompt{hierarchy.description, node->name, node->definition, text};
    std::vector<std::optional<int>> replies(panel.size());
    parallel_for(panel.size(), panel.size(), [&](std::size_t i) {
      try {
        replies[i] = panel[i]->direction(prompt);
      } catch (const Error&) {
      }
    });
    out.votes.clear();
    for (const auto& r : replies) {
      if (r && *r >= -1 && *r <= 1) {
        out.votes.push_back(*r);
      } else {
        ++out.abstentions;
      }
    }
    out.value_path = path;
    const DirectionVote summary = summarize_direction_votes(out.votes);
    if (!summary.dispersed) {
      out.direction = summary.median;
      return out;
    }
    if (out.backed_off || path.size() < 2) return out;
    out.backed_off = true;
    path.pop_back();
  }
}

}  // namespace valuerank
