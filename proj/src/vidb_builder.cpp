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

#include "valuerank/vidb_builder.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_set>

#include "valuerank/errors.hpp"
#include "valuerank/jsonl.hpp"
#include "valuerank/rng.hpp"

namespace valuerank {

using nlohmann::json;

void SeedPoolConfig::validate() const {
  if (pool_size < 1) throw InvalidArgument("pool_size must be >= 1");
  if (window_size < 2) throw InvalidArgument("window_size must be >= 2");
  if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
}

std::vector<CorpusRecord> parse_corpus(const std::string& jsonl_text) {
  std::vector<CorpusRecord> out;
  for (const auto& [line, j] : io::parse_jsonl(jsonl_text)) {
    CorpusRecord r;
    auto text = j.find("text");
    if (text == j.end() || !text->is_string()) throw SchemaError(line, "text", "expected a string");
    r.text = text->get<std::string>();
    if (trim(r.text).empty()) throw SchemaError(line, "text", "empty");
    if (auto v = j.find("assigned_value"); v != j.end() && !v->is_null()) {
      if (!v->is_string()) throw SchemaError(line, "assigned_value", "expected a string or null");
      r.assigned_value = v->get<std::string>();
    }
    if (auto d = j.find("direction_label"); d != j.end() && !d->is_null()) {
      if (!d->is_number_integer()) throw SchemaError(line, "direction_label", "expected an integer");
      r.direction_label = d->get<int>();
      if (r.direction_label < -1 || r.direction_label > 1) {
        throw SchemaError(line, "direction_label", "must be -1, 0 or +1");
      }
    }
    if (auto s = j.find("source"); s != j.end() && !s->is_null()) {
      if (!s->is_string()) throw SchemaError(line, "source", "expected a string");
      r.source = s->get<std::string>();
    }
    if (auto u = j.find("planted_utility"); u != j.end() && !u->is_null()) {
      if (!u->is_number()) throw SchemaError(line, "planted_utility", "expected a number");
      r.planted_utility = u->get<double>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path) {
  return parse_corpus(io::read_text(path));
}

std::string serialize_corpus(std::span<const CorpusRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["text"] = r.text;
    j["assigned_value"] = r.assigned_value ? json(*r.assigned_value) : json(nullptr);
    j["direction_label"] = r.direction_label;
    j["source"] = r.source;
    if (r.planted_utility) j["planted_utility"] = *r.planted_utility;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<CorpusRecord> build_seed_pool(std::span<const CorpusRecord> corpus,
                                          const SeedPoolConfig& config, SeedPoolReport* report) {
  if (corpus.empty()) throw InvalidArgument("empty corpus");
  config.validate();
  SeedPoolReport rep;

  std::vector<const CorpusRecord*> unique;
  std::unordered_set<std::string> seen;
  for (const auto& r : corpus) {
    if (trim(r.text).empty()) throw InvalidArgument("corpus record with empty text");
    if (seen.insert(r.text).second) {
      unique.push_back(&r);
    } else {
      ++rep.duplicates_removed;
    }
  }

  std::vector<const CorpusRecord*> chosen;
  std::vector<const CorpusRecord*> rest;
  for (const auto* r : unique) {
    (r->assigned_value == config.target_value ? chosen : rest).push_back(r);
  }
  rep.matched = chosen.size();
  std::vector<bool> is_match(chosen.size(), true);

  Rng rng(derive_seed(config.rng_seed, "seed-pool"));
  if (chosen.size() < config.pool_size && !rest.empty()) {
    const std::size_t want = std::min(config.pool_size - chosen.size(), rest.size());
    for (std::size_t idx : rng.sample_without_replacement(rest.size(), want)) {
      chosen.push_back(rest[idx]);
      is_match.push_back(false);
    }
    rep.sampled = want;
  }

  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i]->direction_label > 0) positive.push_back(i);
    if (chosen[i]->direction_label < 0) negative.push_back(i);
  }
  std::vector<bool> keep(chosen.size(), true);
  if (!positive.empty() && !negative.empty() && positive.size() != negative.size()) {
    auto& majority = positive.size() > negative.size() ? positive : negative;
    const std::size_t excess = majority.size() - std::min(positive.size(), negative.size());
    // Drop sampled records before target-value matches.
    std::vector<std::size_t> sampled;
    std::vector<std::size_t> matched;
    for (std::size_t i : majority) (is_match[i] ? matched : sampled).push_back(i);
    rng.shuffle(sampled);
    rng.shuffle(matched);
    sampled.insert(sampled.end(), matched.begin(), matched.end());
    for (std::size_t n = 0; n < excess; ++n) keep[sampled[n]] = false;
    rep.dropped_for_balance = excess;
  }

  std::vector<CorpusRecord> out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (keep[i]) out.push_back(*chosen[i]);
  }
  if (report) *report = rep;
  return out;
}

std::vector<IndexedWindow> generate_windows(std::span<const CorpusRecord> pool,
                                            const SeedPoolConfig& config,
                                            const WindowContext& context) {
  config.validate();
  const std::size_t k = config.window_size;
  if (pool.size() < k) throw InvalidArgument("pool smaller than the window size");
  const PromptFormat format =
      context.format.value_or(k == 2 ? PromptFormat::Binary : PromptFormat::Default);

  std::vector<ItemId> ids;
  ids.reserve(pool.size());
  for (const auto& r : pool) ids.push_back(make_item_id(r.text, config.target_value));

  Rng rng(derive_seed(config.rng_seed, "windows"));
  std::vector<IndexedWindow> out;
  out.reserve(pool.size() * config.repetitions);
  for (std::size_t f = 0; f < pool.size(); ++f) {
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      std::vector<std::size_t> members{f};
      for (std::size_t idx : rng.sample_without_replacement(pool.size() - 1, k - 1)) {
        members.push_back(idx >= f ? idx + 1 : idx);
      }
      if (k == 2) {
        if (rep % 2 == 1) std::swap(members[0], members[1]);
      } else {
        rng.shuffle(members);
      }
      IndexedWindow w;
      w.window_index = f * config.repetitions + rep;
      w.focal = ids[f];
      w.prompt.value_name = context.value_name.empty() ? config.target_value : context.value_name;
      w.prompt.value_definition = context.value_definition;
      w.prompt.theory_name = context.theory_name;
      w.prompt.label_name = context.label_name;
      w.prompt.format = format;
      for (std::size_t m : members) w.prompt.texts.push_back({ids[m], pool[m].text});
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::vector<VidbEntry> aggregate_to_db(std::span<const RankingObservation> observations,
                                       std::span<const CorpusRecord> pool,
                                       const std::string& value, const std::string& theory,
                                       const FitConfig& fit, const CalibrationMethod& method,
                                       FitReport* fit_report) {
  if (observations.empty()) throw InvalidArgument("no observations to aggregate");
  std::map<ItemId, std::size_t> index;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    index.emplace(make_item_id(pool[i].text, value), i);
  }

  // Canonical order makes the floating-point reduction independent of the
  // order observations arrived in.
  std::vector<RankingObservation> sorted(observations.begin(), observations.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.items, a.judge_id, a.window_index) <
           std::tie(b.items, b.judge_id, b.window_index);
  });
  std::map<ItemId, int> windows;
  for (const auto& obs : sorted) {
    for (const auto& id : obs.items) {
      if (!index.contains(id)) throw MissingItem(id);
      ++windows[id];
    }
  }

  FitReport report = fit_pl_report(sorted, fit);
  const CalibratedScores scores = calibrate(report.utilities, method);

  std::vector<VidbEntry> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const ItemId id = make_item_id(pool[i].text, value);
    auto w = windows.find(id);
    if (w == windows.end()) continue;
    VidbEntry e;
    e.item_id = id;
    e.value = value;
    e.theory = theory;
    e.text = pool[i].text;
    e.raw_utility = report.utilities.at(id);
    e.calibrated_score = scores.at(id);
    e.final_score = e.calibrated_score;
    e.n_windows = w->second;
    out.push_back(std::move(e));
  }
  if (fit_report) *fit_report = std::move(report);
  return out;
}

TriageResult triage_flags(std::span<const VidbEntry> entries, std::span<Judge* const> panel,
                          const std::string& value_definition) {
  if (panel.empty()) throw InvalidArgument("empty flag panel");
  const std::size_t n = entries.size();
  const std::size_t p = panel.size();
  // -1 marks an abstention.
  std::vector<int> replies(n * p, -1);
  std::vector<std::string> reasons(n * p);
  std::size_t workers = 0;
  for (Judge* j : panel) workers += j->max_in_flight();
  parallel_for(n * p, workers, [&](std::size_t task) {
    const VidbEntry& e = entries[task / p];
    FlagPrompt prompt{e.item_id, value_definition, e.text, e.calibrated_score};
    try {
      replies[task] = panel[task % p]->plausibility(prompt);
    } catch (const Error& err) {
      reasons[task] = err.what();
    }
  });

  TriageResult out;
  out.entries.assign(entries.begin(), entries.end());
  for (std::size_t i = 0; i < n; ++i) {
    int zeros = 0;
    int abstain = 0;
    for (std::size_t j = 0; j < p; ++j) {
      const int r = replies[i * p + j];
      if (r == 0) ++zeros;
      if (r < 0) {
        ++abstain;
        out.abstentions.push_back({entries[i].item_id, panel[j]->id(), reasons[i * p + j]});
      }
    }
    VidbEntry& e = out.entries[i];
    e.flag_votes = zeros;
    e.flagged = zeros >= kFlagVoteThreshold || abstain > kMaxAbstentions;
  }
  return out;
}

std::vector<VidbEntry> apply_human_ratings(std::vector<VidbEntry> entries,
                                           const std::map<ItemId, std::vector<double>>& ratings) {
  std::map<ItemId, std::size_t> index;
  for (std::size_t i = 0; i < entries.size(); ++i) index.emplace(entries[i].item_id, i);
  for (const auto& [id, values] : ratings) {
    auto it = index.find(id);
    if (it == index.end()) throw MissingItem(id);
    if (values.empty()) continue;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                        static_cast<double>(values.size());
    entries[it->second] = blend_human(std::move(entries[it->second]), mean);
  }
  return entries;
}

BuildResult build_vidb(std::span<const CorpusRecord> corpus, const BuildConfig& config,
                       std::span<Judge* const> rankers, std::span<Judge* const> panel) {
  if (rankers.empty()) throw InvalidArgument("no ranking judges");
  BuildResult out;
  const auto pool = build_seed_pool(corpus, config.pool, &out.pool_report);
  out.pool_records = pool.size();
  const auto windows = generate_windows(pool, config.pool, config.context);
  out.windows = windows.size();
  RankingCollection collected = collect_rankings(windows, rankers);
  out.discards = std::move(collected.discards);
  FitReport fit;
  out.entries = aggregate_to_db(collected.observations, pool, config.pool.target_value,
                                config.theory, config.fit, config.calibration, &fit);
  out.fit_epochs = fit.epochs;
  out.fit_converged = fit.converged;
  if (!panel.empty()) {
    TriageResult triage = triage_flags(out.entries, panel, config.context.value_definition);
    out.entries = std::move(triage.entries);
    out.abstentions = std::move(triage.abstentions);
  }
  return out;
}

SimulatedTruth truth_from_corpus(std::span<const CorpusRecord> corpus, const std::string& value) {
  SimulatedTruth truth;
  for (const auto& r : corpus) {
    if (r.planted_utility) truth.utilities[make_item_id(r.text, value)] = *r.planted_utility;
    truth.directions[r.text] = r.direction_label;
  }
  return truth;
}

}  // namespace valuerank
