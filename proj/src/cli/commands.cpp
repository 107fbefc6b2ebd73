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

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "valuerank/adjudication_service.hpp"
#include "valuerank/calibration.hpp"
#include "valuerank/cli.hpp"
#include "valuerank/embedding_metrics.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/evaluator.hpp"
#include "valuerank/hierarchy.hpp"
#include "valuerank/instability.hpp"
#include "valuerank/judge.hpp"
#include "valuerank/jsonl.hpp"
#include "valuerank/manifest.hpp"
#include "valuerank/profile.hpp"
#include "valuerank/stats.hpp"
#include "valuerank/vidb.hpp"
#include "valuerank/vidb_builder.hpp"

namespace valuerank::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::size_t kDefaultPanelSize = 7;

std::string error_category(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const MissingItem*>(&e)) return "missing-item";
  if (dynamic_cast<const JudgeUnavailable*>(&e)) return "judge-unavailable";
  if (dynamic_cast<const MalformedVerdict*>(&e)) return "malformed-verdict";
  if (dynamic_cast<const WindowDiscarded*>(&e)) return "window-discarded";
  if (dynamic_cast<const EvaluationFailed*>(&e)) return "evaluation-failed";
  if (dynamic_cast<const ProtocolViolation*>(&e)) return "protocol";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid-argument";
  if (dynamic_cast<const json::exception*>(&e)) return "parse";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  return "internal";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<ordered_json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  io::write_text_atomic(path, text);
}

void write_json(const fs::path& path, const ordered_json& doc) {
  io::write_text_atomic(path, doc.dump(2) + "\n");
}

fs::path sibling(const fs::path& output, const std::string& suffix) {
  auto p = output;
  p += suffix;
  return p;
}

/// Judges named by a roster file, or one simulated judge.
std::vector<JudgeSpec> roster_or_default(const std::string& path, std::uint64_t seed) {
  if (!path.empty()) return load_judge_roster(path);
  JudgeSpec spec;
  spec.rng_seed = seed;
  return {spec};
}

std::vector<JudgeSpec> panel_or_default(const std::string& path, std::uint64_t seed) {
  if (!path.empty()) return load_judge_roster(path);
  std::vector<JudgeSpec> out;
  for (std::size_t i = 0; i < kDefaultPanelSize; ++i) {
    JudgeSpec spec;
    spec.rng_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    out.push_back(spec);
  }
  return out;
}

struct JudgeSet {
  std::vector<std::unique_ptr<Judge>> owned;
  std::vector<Judge*> raw;
};

JudgeSet make_judges(const std::vector<JudgeSpec>& specs,
                     const std::shared_ptr<const SimulatedTruth>& truth) {
  JudgeSet out;
  for (const auto& spec : specs) {
    out.owned.push_back(make_judge(spec, truth));
    out.raw.push_back(out.owned.back().get());
  }
  return out;
}

ordered_json roster_json(const std::vector<JudgeSpec>& specs) {
  ordered_json list = ordered_json::array();
  for (const auto& s : specs) list.push_back(ordered_json::parse(judge_spec_to_json(s)));
  return list;
}

ordered_json estimate_json(const IntensityEstimate& e) {
  ordered_json j;
  j["response_id"] = e.response_id;
  j["intensity"] = e.intensity;
  j["raw_utility"] = e.raw_utility;
  j["windows_used"] = e.windows_used;
  j["anchor_span"] = {e.anchor_min, e.anchor_max};
  j["clamped"] = e.clamped;
  j["below_all"] = e.below_all;
  j["discards"] = e.discards.size();
  return j;
}

// vidb-build -----------------------------------------------------------------

struct BuildOptions {
  std::string value;
  std::string corpus;
  std::string out;
  std::size_t k = 2;
  std::size_t m = 30;
  std::size_t pool_size = 10000;
  std::string judges;
  std::string panel;
  std::string calibration = "zscore";
  std::string theory = "custom";
  std::string definition;
  std::string format;
  std::uint64_t seed = 0;
  double learning_rate = 0.05;
  double tolerance = 1e-5;
  int epochs = 50;
};

void cmd_vidb_build(const BuildOptions& o, RunManifest& manifest, std::ostream& out) {
  const auto corpus = read_corpus(o.corpus);
  const auto rankers_spec = roster_or_default(o.judges, o.seed);
  auto truth = std::make_shared<const SimulatedTruth>(truth_from_corpus(corpus, o.value));
  auto rankers = make_judges(rankers_spec, truth);
  std::vector<JudgeSpec> panel_spec;
  if (!o.panel.empty()) panel_spec = load_judge_roster(o.panel);
  auto panel = make_judges(panel_spec, truth);

  BuildConfig config;
  config.pool.target_value = o.value;
  config.pool.pool_size = o.pool_size;
  config.pool.window_size = o.k;
  config.pool.repetitions = o.m;
  config.pool.rng_seed = o.seed;
  config.context.value_name = o.value;
  config.context.value_definition = o.definition;
  if (!o.format.empty()) config.context.format = parse_prompt_format(o.format);
  config.fit.learning_rate = o.learning_rate;
  config.fit.tolerance = o.tolerance;
  config.fit.max_epochs = o.epochs;
  config.fit.rng_seed = derive_seed(o.seed, "fit");
  config.calibration.kind = parse_calibration_kind(o.calibration);
  config.theory = o.theory;

  manifest.config["value"] = o.value;
  manifest.config["theory"] = o.theory;
  manifest.config["k"] = o.k;
  manifest.config["m"] = o.m;
  manifest.config["pool_size"] = o.pool_size;
  manifest.config["calibration"] = std::string(to_string(config.calibration.kind));
  manifest.config["fit"] = {{"learning_rate", o.learning_rate},
                            {"tolerance", o.tolerance},
                            {"max_epochs", o.epochs}};
  manifest.config["judges"] = roster_json(rankers_spec);
  manifest.config["panel"] = roster_json(panel_spec);
  manifest.inputs["corpus"] = o.corpus;

  const BuildResult result = build_vidb(corpus, config, rankers.raw, panel.raw);
  write_db(o.out, result.entries);
  manifest.outputs["db"] = o.out;

  const auto flagged = std::count_if(result.entries.begin(), result.entries.end(),
                                     [](const VidbEntry& e) { return e.flagged; });
  manifest.counters["corpus_records"] = static_cast<std::int64_t>(corpus.size());
  manifest.counters["duplicates_removed"] =
      static_cast<std::int64_t>(result.pool_report.duplicates_removed);
  manifest.counters["dropped_for_balance"] =
      static_cast<std::int64_t>(result.pool_report.dropped_for_balance);
  manifest.counters["pool_records"] = static_cast<std::int64_t>(result.pool_records);
  manifest.counters["windows"] = static_cast<std::int64_t>(result.windows);
  manifest.counters["discards"] = static_cast<std::int64_t>(result.discards.size());
  manifest.counters["abstentions"] = static_cast<std::int64_t>(result.abstentions.size());
  manifest.counters["entries"] = static_cast<std::int64_t>(result.entries.size());
  manifest.counters["flagged"] = flagged;
  manifest.counters["fit_epochs"] = result.fit_epochs;
  manifest.counters["fit_converged"] = result.fit_converged ? 1 : 0;
  if (panel.raw.empty()) manifest.config["triage"] = "skipped: no --panel";

  out << "wrote " << result.entries.size() << " entries (" << flagged << " flagged, "
      << result.discards.size() << " discarded windows) to " << o.out << "\n";
}

// evaluate / steer-gain ------------------------------------------------------

struct EvalOptions {
  std::string db;
  std::string value;
  std::string in;
  std::string out;
  std::size_t k = 6;
  std::size_t m = 3;
  std::string strategy = "bucketed";
  std::string judge;
  std::string panel_ids;
  std::string definition;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
};

EvalConfig eval_config(const EvalOptions& o) {
  EvalConfig c;
  c.window_size = o.k;
  c.iterations = o.m;
  c.strategy = parse_anchor_strategy(o.strategy);
  c.epsilon_below = o.epsilon;
  c.rng_seed = o.seed;
  c.fixed_panel = split_list(o.panel_ids);
  c.value_definition = o.definition;
  c.validate();
  return c;
}

void describe_eval(const EvalOptions& o, const EvalConfig& c, const JudgeSpec& spec,
                   RunManifest& manifest) {
  manifest.config["value"] = o.value;
  manifest.config["k"] = c.window_size;
  manifest.config["m"] = c.iterations;
  manifest.config["strategy"] = std::string(to_string(c.strategy));
  manifest.config["epsilon_below"] = c.epsilon_below;
  manifest.config["fixed_panel"] = c.fixed_panel;
  manifest.config["judge"] = ordered_json::parse(judge_spec_to_json(spec));
  manifest.inputs["db"] = o.db;
  manifest.inputs["in"] = o.in;
}

/// Simulated judges see the DB scores as the anchors' true utilities.
std::shared_ptr<SimulatedTruth> truth_from_db(const std::vector<VidbEntry>& db) {
  auto truth = std::make_shared<SimulatedTruth>();
  for (const auto& e : db) truth->utilities[e.item_id] = e.final_score;
  return truth;
}

std::string record_value(const json& j, const std::string& fallback, std::size_t line) {
  std::string v = j.value("value", fallback);
  if (v.empty()) throw SchemaError(line, "value", "missing and no --value given");
  return v;
}

void cmd_evaluate(const EvalOptions& o, RunManifest& manifest, std::ostream& out,
                  std::ostream& err) {
  const auto db = read_db(o.db);
  const auto records = io::read_jsonl(o.in);
  const EvalConfig config = eval_config(o);
  const JudgeSpec spec = roster_or_default(o.judge, o.seed).front();
  describe_eval(o, config, spec, manifest);

  auto truth = truth_from_db(db);
  std::vector<EvaluationRequest> requests;
  for (const auto& [line, j] : records) {
    EvaluationRequest r;
    r.text = j.at("text").get<std::string>();
    r.id = j.value("id", std::to_string(line));
    r.value = record_value(j, o.value, line);
    if (auto u = j.find("planted_utility"); u != j.end() && u->is_number()) {
      truth->utilities[response_item_id(r.text)] = u->get<double>();
    }
    requests.push_back(std::move(r));
  }
  auto judge = make_judge(spec, truth);
  const auto outcomes = evaluate_batch(requests, db, *judge, config);

  std::vector<ordered_json> lines;
  std::map<std::string, std::vector<double>> per_value;
  std::int64_t failures = 0;
  std::int64_t discards = 0;
  for (const auto& oc : outcomes) {
    ordered_json j;
    j["id"] = oc.id;
    j["value"] = oc.value;
    if (oc.estimate) {
      const ordered_json est = estimate_json(*oc.estimate);
      for (const auto& [k, v] : est.items()) j[k] = v;
      per_value[oc.value].push_back(oc.estimate->intensity);
      discards += static_cast<std::int64_t>(oc.estimate->discards.size());
    } else {
      j["error"] = oc.error;
      ++failures;
      err << "evaluation failed for " << oc.id << ": " << oc.error << "\n";
    }
    lines.push_back(std::move(j));
  }
  write_jsonl(o.out, lines);

  ordered_json summary = ordered_json::object();
  for (const auto& [value, xs] : per_value) {
    summary[value] = {{"n", xs.size()}, {"mean", stats::mean(xs)}, {"sd", stats::population_sd(xs)}};
    out << value << ": n=" << xs.size() << " mean=" << stats::mean(xs)
        << " sd=" << stats::population_sd(xs) << "\n";
  }
  write_json(sibling(o.out, ".summary.json"), summary);
  manifest.outputs["estimates"] = o.out;
  manifest.outputs["summary"] = sibling(o.out, ".summary.json").string();
  manifest.counters["requests"] = static_cast<std::int64_t>(requests.size());
  manifest.counters["failures"] = failures;
  manifest.counters["discards"] = discards;
  out << "evaluated " << requests.size() - failures << " of " << requests.size()
      << " responses (" << failures << " failed)\n";
}

void cmd_steer_gain(const EvalOptions& o, RunManifest& manifest, std::ostream& out,
                    std::ostream& err) {
  const auto db = read_db(o.db);
  const auto records = io::read_jsonl(o.in);
  const EvalConfig config = eval_config(o);
  const JudgeSpec spec = roster_or_default(o.judge, o.seed).front();
  describe_eval(o, config, spec, manifest);

  struct Pair {
    std::string id, value, default_text, steered_text;
  };
  auto truth = truth_from_db(db);
  std::vector<Pair> pairs;
  for (const auto& [line, j] : records) {
    Pair p{j.value("id", std::to_string(line)), record_value(j, o.value, line),
           j.at("default_text").get<std::string>(), j.at("steered_text").get<std::string>()};
    if (auto u = j.find("default_utility"); u != j.end() && u->is_number()) {
      truth->utilities[response_item_id(p.default_text)] = u->get<double>();
    }
    if (auto u = j.find("steered_utility"); u != j.end() && u->is_number()) {
      truth->utilities[response_item_id(p.steered_text)] = u->get<double>();
    }
    pairs.push_back(std::move(p));
  }
  auto judge = make_judge(spec, truth);
  std::map<std::string, std::unique_ptr<AnchorPool>> pools;
  for (const auto& p : pairs) {
    if (!pools.contains(p.value)) pools.emplace(p.value, std::make_unique<AnchorPool>(db, p.value));
  }

  std::vector<ordered_json> lines(pairs.size());
  std::vector<std::optional<double>> deltas(pairs.size());
  parallel_for(pairs.size(), judge->max_in_flight(), [&](std::size_t i) {
    const auto& p = pairs[i];
    ordered_json j;
    j["id"] = p.id;
    j["value"] = p.value;
    try {
      const SteeringGain g =
          steering_gain(p.default_text, p.steered_text, *pools.at(p.value), *judge, config);
      j["delta"] = g.delta;
      j["default"] = estimate_json(g.default_estimate);
      j["steered"] = estimate_json(g.steered_estimate);
      deltas[i] = g.delta;
    } catch (const Error& e) {
      j["error"] = e.what();
    }
    lines[i] = std::move(j);
  });
  write_jsonl(o.out, lines);

  std::vector<double> ok;
  std::int64_t failures = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (deltas[i]) {
      ok.push_back(*deltas[i]);
    } else {
      ++failures;
      err << "steering gain failed for " << pairs[i].id << ": "
          << lines[i]["error"].get<std::string>() << "\n";
    }
  }
  manifest.outputs["gains"] = o.out;
  manifest.counters["pairs"] = static_cast<std::int64_t>(pairs.size());
  manifest.counters["failures"] = failures;
  if (!ok.empty()) {
    out << "mean steering gain " << stats::mean(ok) << " over " << ok.size() << " pairs\n";
  }
  out << failures << " pairs failed\n";
}

// hierarchy-map ----------------------------------------------------------------

struct MapOptions {
  std::string theory;
  std::string in;
  std::string out;
  std::string panel;
  std::uint64_t seed = 0;
};

void cmd_hierarchy_map(const MapOptions& o, RunManifest& manifest, std::ostream& out) {
  const ValueHierarchy hierarchy = resolve_hierarchy(o.theory);
  const auto records = io::read_jsonl(o.in);
  const auto specs = panel_or_default(o.panel, o.seed);

  auto truth = std::make_shared<SimulatedTruth>();
  struct Item {
    std::string id, text;
  };
  std::vector<Item> items;
  for (const auto& [line, j] : records) {
    Item item{j.value("id", std::to_string(line)), j.at("text").get<std::string>()};
    if (auto p = j.find("label_path"); p != j.end() && p->is_array()) {
      truth->label_paths[item.text] = p->get<std::vector<std::string>>();
    }
    if (auto d = j.find("direction"); d != j.end() && d->is_number_integer()) {
      truth->directions[item.text] = d->get<int>();
    }
    items.push_back(std::move(item));
  }
  auto panel = make_judges(specs, truth);
  manifest.config["theory"] = hierarchy.theory;
  manifest.config["panel"] = roster_json(specs);
  manifest.inputs["in"] = o.in;

  std::vector<ordered_json> lines(items.size());
  std::vector<std::optional<ordered_json>> queue(items.size());
  std::vector<int> abstentions(items.size(), 0);
  parallel_for(items.size(), 4, [&](std::size_t i) {
    LabelPath label = map_text(items[i].text, hierarchy, panel.raw);
    ordered_json j;
    j["id"] = items[i].id;
    j["text"] = items[i].text;
    j["theory"] = label.theory;
    j["path"] = label.path;
    j["status"] = std::string(to_string(label.status));
    j["direction"] = nullptr;
    int abstained = label.abstentions;
    if (label.status != LabelStatus::NeedsHuman && !label.path.empty()) {
      const DirectionResult d = classify_direction(items[i].text, hierarchy, label.path, panel.raw);
      if (d.direction) j["direction"] = *d.direction;
      j["direction_status"] = d.direction ? "resolved" : "unresolved";
      j["direction_value"] = d.value_path.back();
      j["backed_off"] = d.backed_off;
      abstained += d.abstentions;
    }
    j["abstentions"] = abstained;
    abstentions[i] = abstained;
    if (label.status == LabelStatus::NeedsHuman) {
      ordered_json rounds = ordered_json::array();
      for (const auto& r : label.rounds) {
        rounds.push_back({{"level", r.level},
                          {"votes", r.tally.votes},
                          {"neutral_offered", r.tally.includes_neutral},
                          {"decision", std::string(to_string(r.decision.outcome))}});
      }
      queue[i] = ordered_json{{"id", items[i].id},
                              {"text", items[i].text},
                              {"theory", label.theory},
                              {"path", label.path},
                              {"rounds", rounds}};
    }
    lines[i] = std::move(j);
  });
  write_jsonl(o.out, lines);
  std::vector<ordered_json> queued;
  for (auto& q : queue) {
    if (q) queued.push_back(std::move(*q));
  }
  const fs::path queue_path = sibling(o.out, ".queue.jsonl");
  write_jsonl(queue_path, queued);

  std::map<std::string, std::int64_t> by_status;
  for (const auto& l : lines) ++by_status[l["status"].get<std::string>()];
  manifest.outputs["labels"] = o.out;
  manifest.outputs["needs_human_queue"] = queue_path.string();
  manifest.counters["texts"] = static_cast<std::int64_t>(items.size());
  for (const auto& [k, v] : by_status) manifest.counters[k] = v;
  manifest.counters["abstentions"] = std::accumulate(abstentions.begin(), abstentions.end(), 0);
  out << "labeled " << items.size() << " texts; " << queued.size() << " need human review\n";
}

// metrics ----------------------------------------------------------------------

struct MetricsOptions {
  std::string embeddings;
  std::vector<std::string> which;
  std::string anchors;
  std::string out;
  std::size_t level = 2;
  double tau = 0.1;
  std::uint64_t seed = 0;
};

void cmd_metrics(const MetricsOptions& o, RunManifest& manifest, std::ostream& out) {
  const auto embeddings = read_embeddings(o.embeddings);
  std::vector<std::string> which = o.which;
  if (which.empty()) which = {"rankacc", "simcorr", "ortho"};
  manifest.config["which"] = which;
  manifest.config["level"] = o.level;
  manifest.config["tau"] = o.tau;
  manifest.inputs["embeddings"] = o.embeddings;

  ordered_json report;
  report["embeddings"] = embeddings.size();
  for (const auto& w : which) {
    if (w == "rankacc") {
      const auto r = hierarchical_ranking_accuracy(embeddings, o.seed);
      report["rankacc"] = {{"accuracy", r.accuracy},
                           {"anchors_used", r.anchors_used},
                           {"anchors_skipped", r.anchors_skipped},
                           {"pairs", r.pairs}};
      out << "hierarchical ranking accuracy: " << r.accuracy << "\n";
    } else if (w == "simcorr") {
      const auto r = similarity_correlation(embeddings);
      report["simcorr"] = r ? ordered_json(*r) : ordered_json(nullptr);
      out << "similarity correlation: " << (r ? std::to_string(*r) : "undefined") << "\n";
    } else if (w == "ortho") {
      const auto r = value_vector_orthogonality(embeddings, o.level);
      report["ortho"] = {{"level", o.level},
                         {"values", r.values},
                         {"matrix", r.matrix},
                         {"mean", r.mean ? ordered_json(*r.mean) : ordered_json(nullptr)},
                         {"median", r.median ? ordered_json(*r.median) : ordered_json(nullptr)},
                         {"excluded", r.excluded}};
      out << "value-vector orthogonality (mean): "
          << (r.mean ? std::to_string(*r.mean) : "undefined") << "\n";
    } else if (w == "losses") {
      std::optional<AnchorSet> anchors;
      if (!o.anchors.empty()) anchors = read_anchor_set(o.anchors);
      const double tau = anchors ? anchors->tau : o.tau;
      ordered_json levels = ordered_json::array();
      for (std::size_t v = 1; v <= label_depth(embeddings); ++v) {
        const auto l = hier_contrastive_loss(embeddings, v, tau);
        levels.push_back({{"level", v},
                          {"loss", l.loss},
                          {"anchors_used", l.anchors_used},
                          {"anchors_skipped", l.anchors_skipped}});
      }
      const double l_hier = hier_loss(embeddings, tau);
      ordered_json losses{{"tau", tau}, {"levels", levels}, {"l_hier", l_hier}};
      if (anchors) {
        const auto a = anchor_infonce_losses(embeddings, *anchors, l_hier);
        losses["l_ind"] = a.l_ind;
        losses["l_theory"] = a.l_theory;
        losses["total"] = a.total;
        manifest.inputs["anchors"] = o.anchors;
      }
      report["losses"] = losses;
      out << "L_hier: " << l_hier << "\n";
    } else {
      throw InvalidArgument("unknown metric: " + w);
    }
  }
  write_json(o.out, report);
  manifest.outputs["report"] = o.out;
}

// profile ----------------------------------------------------------------------

struct ProfileOptions {
  std::string questions;
  std::string scores;
  std::string embeddings;
  std::string value_embeddings;
  std::string values;
  std::string normalize = "hybrid";
  double alpha = kHybridAlpha;
  std::string out;
};

void cmd_profile(const ProfileOptions& o, RunManifest& manifest, std::ostream& out) {
  const auto questions = read_questions(o.questions);
  const auto table = read_intensity_table(o.scores);
  const auto vectors = read_vector_table(o.embeddings);
  const auto value_vectors =
      o.value_embeddings.empty() ? vectors : read_vector_table(o.value_embeddings);
  std::vector<std::string> values = split_list(o.values);
  if (values.empty()) {
    std::set<std::string> seen;
    for (const auto& [key, _] : table) seen.insert(key.second);
    values.assign(seen.begin(), seen.end());
  }
  const auto mode = parse_profile_normalization(o.normalize);
  manifest.config["values"] = values;
  manifest.config["normalize"] = std::string(to_string(mode));
  manifest.config["alpha"] = o.alpha;
  manifest.inputs["questions"] = o.questions;
  manifest.inputs["scores"] = o.scores;
  manifest.inputs["embeddings"] = o.embeddings;
  if (!o.value_embeddings.empty()) manifest.inputs["value_embeddings"] = o.value_embeddings;

  const IntensityLookup intensity = [&](const std::string& id, const std::string& value) {
    auto it = table.find({id, value});
    return it == table.end() ? std::optional<double>() : std::optional<double>(it->second);
  };
  const EmbeddingLookup embedding = [&](const std::string& id) -> const std::vector<double>* {
    auto it = vectors.find(id);
    return it == vectors.end() ? nullptr : &it->second;
  };
  const ProfileBuild raw = group_profiles(questions, values, intensity, embedding, value_vectors);
  const ProfileMatrix normalized = normalize_profiles(raw.matrix, mode, o.alpha);
  io::write_text_atomic(o.out, profile_to_csv(normalized));

  std::vector<ordered_json> details;
  for (std::size_t g = 0; g < normalized.groups.size(); ++g) {
    for (std::size_t v = 0; v < normalized.values.size(); ++v) {
      const auto& r = raw.matrix.cells[g][v];
      const auto& n = normalized.cells[g][v];
      details.push_back({{"group", normalized.groups[g]},
                         {"value", normalized.values[v]},
                         {"raw", r ? ordered_json(*r) : ordered_json(nullptr)},
                         {"normalized", n ? ordered_json(*n) : ordered_json(nullptr)},
                         {"n_questions", raw.matrix.counts[g][v]}});
    }
  }
  const fs::path details_path = sibling(o.out, ".details.jsonl");
  write_jsonl(details_path, details);
  manifest.outputs["profile"] = o.out;
  manifest.outputs["details"] = details_path.string();
  manifest.counters["groups"] = static_cast<std::int64_t>(normalized.groups.size());
  manifest.counters["excluded_question_values"] = static_cast<std::int64_t>(raw.excluded.size());
  out << "profiled " << normalized.groups.size() << " groups over " << values.size()
      << " values\n";
}

// instability-compare ------------------------------------------------------------

struct InstabilityOptions {
  std::string judges;
  std::string texts;
  std::string mode = "both";
  std::string out;
  std::size_t m = 30;
  std::size_t k = 2;
  std::string calibration = "zscore";
  std::uint64_t seed = 0;
};

ordered_json report_json(const InstabilityReport& r) {
  const auto opt = [](const std::optional<double>& x) {
    return x ? ordered_json(*x) : ordered_json(nullptr);
  };
  return {{"mode", std::string(to_string(r.mode))},
          {"items", r.items},
          {"judges", r.judges},
          {"mean_variance", r.mean_variance},
          {"mean_max_range", r.mean_max_range},
          {"sign_flip_rate", r.sign_flip_rate},
          {"sign_accuracy", opt(r.sign_accuracy)},
          {"pairwise_accuracy", opt(r.pairwise_accuracy)}};
}

void cmd_instability(const InstabilityOptions& o, RunManifest& manifest, std::ostream& out) {
  const auto items = read_instability_items(o.texts);
  const auto specs = load_judge_roster(o.judges);
  auto truth = std::make_shared<SimulatedTruth>();
  for (const auto& item : items) {
    if (item.planted_utility) truth->utilities[item.id] = *item.planted_utility;
  }
  auto judges = make_judges(specs, truth);
  std::vector<InstabilityMode> modes;
  if (o.mode == "both") {
    modes = {InstabilityMode::Rating, InstabilityMode::Ranking};
  } else {
    modes = {parse_instability_mode(o.mode)};
  }
  manifest.config["mode"] = o.mode;
  manifest.config["m"] = o.m;
  manifest.config["k"] = o.k;
  manifest.config["judges"] = roster_json(specs);
  manifest.inputs["texts"] = o.texts;
  manifest.inputs["judges"] = o.judges;

  ordered_json report = ordered_json::object();
  for (InstabilityMode mode : modes) {
    InstabilityConfig config;
    config.mode = mode;
    config.repetitions = o.m;
    config.window_size = o.k;
    config.calibration.kind = parse_calibration_kind(o.calibration);
    config.rng_seed = o.seed;
    config.fit.rng_seed = derive_seed(o.seed, "fit");
    const InstabilityReport r = compare_instability(items, judges.raw, config);
    report[std::string(to_string(mode))] = report_json(r);
    out << to_string(mode) << ": mean variance " << r.mean_variance << ", mean max range "
        << r.mean_max_range << ", sign-flip rate " << r.sign_flip_rate << "\n";
  }
  write_json(o.out, report);
  manifest.outputs["report"] = o.out;
  manifest.counters["items"] = static_cast<std::int64_t>(items.size());
}

// serve ------------------------------------------------------------------------

struct ServeOptions {
  std::string db;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string definitions;
};

int cmd_serve(const ServeOptions& o, std::ostream& out) {
  std::map<std::string, std::string> definitions;
  if (!o.definitions.empty()) definitions = read_definitions(o.definitions);
  auto store = std::make_shared<AdjudicationStore>(o.db, std::move(definitions));
  std::optional<fs::path> static_dir;
  if (!o.static_dir.empty()) static_dir = o.static_dir;
  AdjudicationServer server(store, static_dir);
  const int port = server.bind(o.host, o.port);
  if (port < 0) throw InvalidArgument("cannot bind " + o.host + ":" + std::to_string(o.port));
  out << "serving " << o.db << " on http://" << o.host << ":" << port << "\n" << std::flush;
  return server.listen_after_bind() ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Value-intensity ranking pipeline", "valuerank"};
  app.require_subcommand(1);

  BuildOptions build;
  auto* b = app.add_subcommand("vidb-build", "Build a value-intensity DB from a corpus");
  b->add_option("--value", build.value, "Target value name")->required();
  b->add_option("--corpus", build.corpus, "Corpus file (JSONL)")->required()->check(CLI::ExistingFile);
  b->add_option("--out", build.out, "Output DB file (JSONL)")->required();
  b->add_option("--k", build.k, "Window size")->capture_default_str()->check(CLI::Range(2, 64));
  b->add_option("--m", build.m, "Windows per focal text")->capture_default_str()->check(CLI::PositiveNumber);
  b->add_option("--pool-size", build.pool_size, "Seed pool size")->capture_default_str();
  b->add_option("--judges", build.judges, "Ranking judge roster (JSON); one simulated judge if omitted");
  b->add_option("--panel", build.panel, "Flag-triage panel roster (JSON); triage is skipped if omitted");
  b->add_option("--calibration", build.calibration, "zscore, minmax or quantile")->capture_default_str();
  b->add_option("--theory", build.theory, "Theory name stored with each entry")->capture_default_str();
  b->add_option("--definition", build.definition, "Value definition shown to judges");
  b->add_option("--format", build.format, "Prompt format: binary, default or oneshot");
  b->add_option("--seed", build.seed, "RNG seed")->capture_default_str();
  b->add_option("--learning-rate", build.learning_rate, "PL step size")->capture_default_str();
  b->add_option("--tolerance", build.tolerance, "PL stopping tolerance")->capture_default_str();
  b->add_option("--epochs", build.epochs, "PL epoch cap")->capture_default_str();

  EvalOptions eval;
  auto* e = app.add_subcommand("evaluate", "Estimate intensities of responses against DB anchors");
  EvalOptions gain;
  auto* g = app.add_subcommand("steer-gain", "Intensity difference of steered vs default responses");
  for (auto [cmd, opts, input_name] :
       {std::tuple{e, &eval, "Responses (JSONL {id, text, value})"},
        std::tuple{g, &gain, "Pairs (JSONL {id, default_text, steered_text, value})"}}) {
    cmd->add_option("--db", opts->db, "DB file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--value", opts->value, "Value for records that do not name one");
    cmd->add_option(cmd == e ? "--in" : "--pairs", opts->in, input_name)
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts->out, "Output file (JSONL)")->required();
    cmd->add_option("--k", opts->k, "Window size")->capture_default_str()->check(CLI::Range(2, 64));
    cmd->add_option("--m", opts->m, "Iterations")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--strategy", opts->strategy, "random, bucketed or fixed")->capture_default_str();
    cmd->add_option("--fixed-panel", opts->panel_ids, "Comma-separated anchor ids for fixed");
    cmd->add_option("--judge", opts->judge, "Judge roster (JSON); its first judge is used");
    cmd->add_option("--definition", opts->definition, "Value definition shown to the judge");
    cmd->add_option("--epsilon", opts->epsilon, "Offset below the lowest anchor")->capture_default_str();
    cmd->add_option("--seed", opts->seed, "RNG seed")->capture_default_str();
  }

  MapOptions map;
  auto* h = app.add_subcommand("hierarchy-map", "Label texts with a value hierarchy by panel consensus");
  h->add_option("--theory", map.theory, "svt, mft, duty, rights or a hierarchy file")->required();
  h->add_option("--in", map.in, "Texts (JSONL {id, text})")->required()->check(CLI::ExistingFile);
  h->add_option("--out", map.out, "Labels (JSONL)")->required();
  h->add_option("--panel", map.panel, "Panel roster (JSON); seven simulated judges if omitted");
  h->add_option("--seed", map.seed, "RNG seed")->capture_default_str();

  MetricsOptions metrics;
  auto* mt = app.add_subcommand("metrics", "Embedding metrics and loss values");
  mt->add_option("--embeddings", metrics.embeddings, "Embeddings (JSONL)")->required()->check(CLI::ExistingFile);
  mt->add_option("--which", metrics.which, "rankacc, simcorr, ortho, losses")
      ->delimiter(',')
      ->check(CLI::IsMember({"rankacc", "simcorr", "ortho", "losses"}));
  mt->add_option("--anchors", metrics.anchors, "Anchor set (JSON) for the InfoNCE terms");
  mt->add_option("--out", metrics.out, "Report (JSON)")->required();
  mt->add_option("--level", metrics.level, "Label level for orthogonality")->capture_default_str()->check(CLI::Range(1, 3));
  mt->add_option("--tau", metrics.tau, "Temperature for L_hier")->capture_default_str();
  mt->add_option("--seed", metrics.seed, "RNG seed")->capture_default_str();

  ProfileOptions profile;
  auto* p = app.add_subcommand("profile", "Group value profiles from response distributions");
  p->add_option("--questions", profile.questions, "Questions (JSONL)")->required()->check(CLI::ExistingFile);
  p->add_option("--scores", profile.scores, "Intensities (JSONL {response_id, value, intensity})")->required()->check(CLI::ExistingFile);
  p->add_option("--embeddings", profile.embeddings, "Response embeddings (JSONL {id, vector})")->required()->check(CLI::ExistingFile);
  p->add_option("--value-embeddings", profile.value_embeddings, "Value embeddings (JSONL {id, vector}); defaults to --embeddings");
  p->add_option("--values", profile.values, "Comma-separated values; all scored values if omitted");
  p->add_option("--normalize", profile.normalize, "raw, row, column or hybrid")->capture_default_str();
  p->add_option("--alpha", profile.alpha, "Hybrid weight")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  p->add_option("--out", profile.out, "Profile table (CSV)")->required();

  InstabilityOptions inst;
  auto* ic = app.add_subcommand("instability-compare", "Rating vs ranking instability across judges");
  ic->add_option("--judges", inst.judges, "Judge roster (JSON)")->required()->check(CLI::ExistingFile);
  ic->add_option("--texts", inst.texts, "Items (JSONL)")->required()->check(CLI::ExistingFile);
  ic->add_option("--mode", inst.mode, "rating, ranking or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"rating", "ranking", "both"}));
  ic->add_option("--out", inst.out, "Report (JSON)")->required();
  ic->add_option("--m", inst.m, "Windows per item in ranking mode")->capture_default_str();
  ic->add_option("--k", inst.k, "Window size in ranking mode")->capture_default_str();
  ic->add_option("--calibration", inst.calibration, "zscore, minmax or quantile")->capture_default_str();
  ic->add_option("--seed", inst.seed, "RNG seed")->capture_default_str();

  ServeOptions serve;
  auto* s = app.add_subcommand("serve", "Adjudication HTTP service");
  s->add_option("--db", serve.db, "DB file")->required()->check(CLI::ExistingFile);
  s->add_option("--host", serve.host, "Bind address")->capture_default_str();
  s->add_option("--port", serve.port, "Port (0 picks a free one)")->capture_default_str();
  s->add_option("--static-dir", serve.static_dir, "Directory of UI assets");
  s->add_option("--definitions", serve.definitions, "Value definitions (JSON object)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*s) {
    try {
      return cmd_serve(serve, out);
    } catch (const std::exception& ex) {
      err << "error[" << error_category(ex) << "]: " << ex.what() << "\n";
      return kExitFailure;
    }
  }

  RunManifest manifest;
  fs::path output;
  try {
    if (*b) {
      manifest.command = "vidb-build";
      manifest.rng_seed = build.seed;
      output = build.out;
      cmd_vidb_build(build, manifest, out);
    } else if (*e) {
      manifest.command = "evaluate";
      manifest.rng_seed = eval.seed;
      output = eval.out;
      cmd_evaluate(eval, manifest, out, err);
    } else if (*g) {
      manifest.command = "steer-gain";
      manifest.rng_seed = gain.seed;
      output = gain.out;
      cmd_steer_gain(gain, manifest, out, err);
    } else if (*h) {
      manifest.command = "hierarchy-map";
      manifest.rng_seed = map.seed;
      output = map.out;
      cmd_hierarchy_map(map, manifest, out);
    } else if (*mt) {
      manifest.command = "metrics";
      manifest.rng_seed = metrics.seed;
      output = metrics.out;
      cmd_metrics(metrics, manifest, out);
    } else if (*p) {
      manifest.command = "profile";
      output = profile.out;
      cmd_profile(profile, manifest, out);
    } else if (*ic) {
      manifest.command = "instability-compare";
      manifest.rng_seed = inst.seed;
      output = inst.out;
      cmd_instability(inst, manifest, out);
    }
  } catch (const std::exception& ex) {
    manifest.status = "failed";
    manifest.error = std::string(error_category(ex)) + ": " + ex.what();
    manifest.finished_at = std::chrono::system_clock::now();
    err << "error[" << error_category(ex) << "]: " << ex.what() << "\n";
    try {
      write_manifest(manifest, output);
    } catch (const std::exception&) {
    }
    return kExitFailure;
  }
  manifest.finished_at = std::chrono::system_clock::now();
  write_manifest(manifest, output);
  return kExitOk;
}

}  // namespace valuerank::cli
