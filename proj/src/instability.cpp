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

#include "valuerank/instability.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/jsonl.hpp"
#include "valuerank/rng.hpp"
#include "valuerank/stats.hpp"
#include "valuerank/vidb.hpp"
#include "valuerank/vidb_builder.hpp"

namespace valuerank {

std::string_view to_string(InstabilityMode mode) {
  return mode == InstabilityMode::Rating ? "rating" : "ranking";
}

InstabilityMode parse_instability_mode(std::string_view name) {
  if (name == "rating") return InstabilityMode::Rating;
  if (name == "ranking") return InstabilityMode::Ranking;
  throw InvalidArgument("unknown mode: " + std::string(name));
}

std::vector<InstabilityItem> parse_instability_items(const std::string& jsonl_text) {
  std::vector<InstabilityItem> out;
  for (const auto& [line, j] : io::parse_jsonl(jsonl_text)) {
    InstabilityItem item;
    try {
      item.text = j.at("text").get<std::string>();
      item.value = j.at("value").get<std::string>();
      item.id = j.value("id", make_item_id(item.text, item.value));
      item.value_definition = j.value("definition", std::string());
      if (auto r = j.find("reference"); r != j.end() && !r->is_null()) {
        item.reference = r->get<double>();
      }
      if (auto u = j.find("planted_utility"); u != j.end() && !u->is_null()) {
        item.planted_utility = u->get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line, "<item>", e.what());
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<InstabilityItem> read_instability_items(const std::filesystem::path& path) {
  return parse_instability_items(io::read_text(path));
}

InstabilityReport summarize_scores(std::vector<std::vector<double>> scores,
                                   std::span<const InstabilityItem> items, InstabilityMode mode) {
  if (scores.size() != items.size() || scores.empty()) {
    throw InvalidArgument("score matrix does not match the items");
  }
  InstabilityReport out;
  out.mode = mode;
  out.items = items.size();
  out.judges = scores.front().size();
  std::vector<double> consensus;
  std::size_t flips = 0;
  for (const auto& row : scores) {
    if (row.size() != out.judges || row.empty()) throw InvalidArgument("ragged score matrix");
    out.mean_variance += stats::population_variance(row);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    out.mean_max_range += *hi - *lo;
    if (*lo < 0.0 && *hi > 0.0) ++flips;
    consensus.push_back(stats::mean(row));
  }
  const double n = static_cast<double>(items.size());
  out.mean_variance /= n;
  out.mean_max_range /= n;
  out.sign_flip_rate = static_cast<double>(flips) / n;

  std::size_t signed_items = 0;
  std::size_t sign_hits = 0;
  std::size_t pairs = 0;
  std::size_t pair_hits = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& ri = items[i].reference;
    if (!ri) continue;
    if (*ri != 0.0) {
      ++signed_items;
      if ((*ri > 0.0 && consensus[i] > 0.0) || (*ri < 0.0 && consensus[i] < 0.0)) ++sign_hits;
    }
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const auto& rj = items[j].reference;
      if (!rj || *rj == *ri || items[j].value != items[i].value) continue;
      ++pairs;
      if ((*ri > *rj) == (consensus[i] > consensus[j]) && consensus[i] != consensus[j]) ++pair_hits;
    }
  }
  if (signed_items) out.sign_accuracy = static_cast<double>(sign_hits) / signed_items;
  if (pairs) out.pairwise_accuracy = static_cast<double>(pair_hits) / pairs;
  out.scores = std::move(scores);
  return out;
}

InstabilityReport compare_instability(std::span<const InstabilityItem> items,
                                      std::span<Judge* const> judges,
                                      const InstabilityConfig& config) {
  if (items.empty()) throw InvalidArgument("no items");
  if (judges.empty()) throw InvalidArgument("no judges");
  std::vector<std::vector<double>> scores(items.size(), std::vector<double>(judges.size(), 0.0));

  if (config.mode == InstabilityMode::Rating) {
    std::size_t workers = 0;
    for (Judge* j : judges) workers += j->max_in_flight();
    parallel_for(items.size() * judges.size(), workers, [&](std::size_t task) {
      const std::size_t i = task / judges.size();
      const std::size_t j = task % judges.size();
      const auto& item = items[i];
      scores[i][j] =
          clip_score(judges[j]->rate({item.id, item.value, item.value_definition, item.text}));
    });
    return summarize_scores(std::move(scores), items, config.mode);
  }

  std::map<std::string, std::vector<std::size_t>> by_value;
  for (std::size_t i = 0; i < items.size(); ++i) by_value[items[i].value].push_back(i);
  for (const auto& [value, members] : by_value) {
    if (members.size() < config.window_size) {
      throw InvalidArgument("value '" + value + "' has fewer items than the window size");
    }
    // Windows are built from the item list directly so caller ids survive.
    SeedPoolConfig pool_config;
    pool_config.target_value = value;
    pool_config.window_size = config.window_size;
    pool_config.repetitions = config.repetitions;
    pool_config.rng_seed = derive_seed(config.rng_seed, value);
    std::vector<CorpusRecord> pool;
    for (std::size_t i : members) pool.push_back({items[i].text, value, 0, "", std::nullopt});
    WindowContext context;
    context.value_name = value;
    context.value_definition = items[members.front()].value_definition;
    auto windows = generate_windows(pool, pool_config, context);
    std::map<ItemId, std::size_t> slot_of;
    for (std::size_t p = 0; p < members.size(); ++p) {
      slot_of[make_item_id(pool[p].text, value)] = members[p];
    }
    for (auto& w : windows) {
      for (auto& slot : w.prompt.texts) slot.item = items[slot_of.at(slot.item)].id;
    }
    for (std::size_t j = 0; j < judges.size(); ++j) {
      Judge* one[] = {judges[j]};
      const RankingCollection collected = collect_rankings(windows, one);
      if (collected.observations.empty()) {
        throw EvaluationFailed("judge " + judges[j]->id() + " produced no rankings");
      }
      const auto utilities = fit_pl(collected.observations, config.fit);
      const auto calibrated = calibrate(utilities, config.calibration);
      for (std::size_t i : members) {
        auto it = calibrated.find(items[i].id);
        if (it == calibrated.end()) throw MissingItem(items[i].id);
        scores[i][j] = it->second;
      }
    }
  }
  return summarize_scores(std::move(scores), items, config.mode);
}

}  // namespace valuerank
