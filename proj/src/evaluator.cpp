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

#include "valuerank/evaluator.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>

#include "valuerank/errors.hpp"

namespace valuerank {

namespace {

constexpr double kGoldenTolerance = 1e-9;
constexpr double kBinLower = kScoreMin;
constexpr double kBinUpper = kScoreMax;

/// One window reduced to what the 1-D likelihood needs.
struct PinnedWindow {
  std::vector<double> theta;  // best first; the free slot holds 0
  std::size_t free_pos = 0;
};

double window_log_probability(const PinnedWindow& w, double u) {
  double hi = u;
  for (std::size_t i = 0; i < w.theta.size(); ++i) {
    if (i != w.free_pos) hi = std::max(hi, w.theta[i]);
  }
  // Suffix sums of exp(theta - hi), walking from the back.
  double total = 0.0;
  double suffix = 0.0;
  for (std::size_t i = w.theta.size(); i-- > 0;) {
    const double t = i == w.free_pos ? u : w.theta[i];
    suffix += std::exp(t - hi);
    if (i + 1 < w.theta.size()) total += (t - hi) - std::log(suffix);
  }
  return total;
}

}  // namespace

std::string_view to_string(AnchorStrategy strategy) {
  switch (strategy) {
    case AnchorStrategy::Random: return "random";
    case AnchorStrategy::Bucketed: return "bucketed";
    case AnchorStrategy::Fixed: return "fixed";
  }
  return "?";
}

AnchorStrategy parse_anchor_strategy(std::string_view name) {
  if (name == "random") return AnchorStrategy::Random;
  if (name == "bucketed") return AnchorStrategy::Bucketed;
  if (name == "fixed") return AnchorStrategy::Fixed;
  throw InvalidArgument("unknown anchor strategy: " + std::string(name));
}

void EvalConfig::validate() const {
  if (window_size < 2) throw InvalidArgument("window_size must be >= 2");
  if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
  if (!(epsilon_below > 0.0)) throw InvalidArgument("epsilon_below must be > 0");
  if (strategy == AnchorStrategy::Fixed && fixed_panel.size() != window_size - 1) {
    throw InvalidArgument("fixed panel must hold window_size - 1 anchors");
  }
}

AnchorPool::AnchorPool(std::span<const VidbEntry> db, std::string value) : value_(std::move(value)) {
  for (const auto& e : db) {
    if (e.value == value_) entries_.push_back(e);
  }
  std::stable_sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return a.final_score < b.final_score;
  });
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].item_id, i);
}

const VidbEntry* AnchorPool::find(const ItemId& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<const VidbEntry*> sample_anchors(const AnchorPool& pool, const EvalConfig& config,
                                             Rng& rng, std::vector<std::string>* notes) {
  config.validate();
  const std::size_t need = config.window_size - 1;
  const auto entries = pool.entries();
  if (entries.size() < need) {
    throw InvalidArgument("value '" + pool.value() + "' has fewer than k-1 DB entries");
  }
  std::vector<const VidbEntry*> out;
  switch (config.strategy) {
    case AnchorStrategy::Fixed:
      for (const auto& id : config.fixed_panel) {
        const VidbEntry* e = pool.find(id);
        if (!e) throw MissingItem(id);
        out.push_back(e);
      }
      break;
    case AnchorStrategy::Random:
      for (std::size_t idx : rng.sample_without_replacement(entries.size(), need)) {
        out.push_back(&entries[idx]);
      }
      break;
    case AnchorStrategy::Bucketed: {
      const double width = (kBinUpper - kBinLower) / static_cast<double>(need);
      std::vector<bool> used(entries.size(), false);
      for (std::size_t b = 0; b < need; ++b) {
        const double lo = kBinLower + width * static_cast<double>(b);
        const double hi = b + 1 == need ? kBinUpper : lo + width;
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < entries.size(); ++i) {
          const double s = entries[i].final_score;
          const bool inside = s >= lo && (b + 1 == need ? s <= hi : s < hi);
          if (inside && !used[i]) members.push_back(i);
        }
        std::size_t pick;
        if (!members.empty()) {
          pick = members[rng.uniform_index(members.size())];
        } else {
          const double centre = 0.5 * (lo + hi);
          pick = entries.size();
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < entries.size(); ++i) {
            const double d = std::abs(entries[i].final_score - centre);
            if (!used[i] && d < best) {
              best = d;
              pick = i;
            }
          }
          if (notes) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "empty bin [%.3g, %.3g): nearest entry %.4g used", lo,
                          hi, entries[pick].final_score);
            notes->push_back(buf);
          }
        }
        used[pick] = true;
        out.push_back(&entries[pick]);
      }
      break;
    }
  }
  return out;
}

ItemId response_item_id(std::string_view text) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "response:%016" PRIx64, fnv1a64(text));
  return buf;
}

double pl_fit_single_free(std::span<const RankingObservation> rankings,
                          const CalibratedScores& pinned, const ItemId& free_item) {
  if (rankings.empty()) throw InvalidArgument("no rankings for the free item");
  std::vector<PinnedWindow> windows;
  windows.reserve(rankings.size());
  for (const auto& r : rankings) {
    r.validate();
    PinnedWindow w;
    bool found = false;
    for (std::size_t i = 0; i < r.items.size(); ++i) {
      if (r.items[i] == free_item) {
        w.free_pos = i;
        w.theta.push_back(0.0);
        found = true;
        continue;
      }
      auto it = pinned.find(r.items[i]);
      if (it == pinned.end()) throw MissingItem(r.items[i]);
      if (!std::isfinite(it->second)) throw InvalidArgument("non-finite pinned utility");
      w.theta.push_back(it->second);
    }
    if (!found) throw InvalidArgument("free item missing from a ranking: " + free_item);
    windows.push_back(std::move(w));
  }
  auto objective = [&](double u) {
    double total = 0.0;
    for (const auto& w : windows) total += window_log_probability(w, u);
    if (!std::isfinite(total)) throw InvalidArgument("non-finite log-likelihood");
    return total;
  };

  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kFreeLower;
  double b = kFreeUpper;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > kGoldenTolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = objective(d);
    }
  }
  return 0.5 * (a + b);
}

IntensityEstimate estimate_from_rankings(std::span<const RankingObservation> rankings,
                                         const AnchorPool& pool, const ItemId& response_id,
                                         const EvalConfig& config) {
  if (rankings.empty()) throw EvaluationFailed("every window was discarded");
  CalibratedScores pinned;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool last_everywhere = true;
  for (const auto& r : rankings) {
    for (const auto& id : r.items) {
      if (id == response_id) continue;
      const VidbEntry* e = pool.find(id);
      if (!e) throw MissingItem(id);
      pinned[id] = e->final_score;
      lo = std::min(lo, e->final_score);
      hi = std::max(hi, e->final_score);
    }
    last_everywhere = last_everywhere && r.items.back() == response_id;
  }

  IntensityEstimate out;
  out.response_id = response_id;
  out.raw_utility = pl_fit_single_free(rankings, pinned, response_id);
  out.windows_used = static_cast<int>(rankings.size());
  out.anchor_min = lo;
  out.anchor_max = hi;
  if (last_everywhere) {
    out.below_all = true;
    out.intensity = clip_score(lo - config.epsilon_below);
  } else {
    out.clamped = out.raw_utility < lo || out.raw_utility > hi;
    out.intensity = clip_score(std::clamp(out.raw_utility, lo, hi));
  }
  return out;
}

std::vector<IntensityEstimate> estimate_intensity_prefixes(std::string_view response_text,
                                                           const AnchorPool& pool, Judge& judge,
                                                           const EvalConfig& config,
                                                           std::span<const std::size_t> prefixes) {
  config.validate();
  if (trim(response_text).empty()) throw InvalidArgument("empty response text");
  const ItemId response_id = response_item_id(response_text);
  const std::uint64_t base = derive_seed(config.rng_seed, response_id);
  const std::size_t k = config.window_size;

  std::size_t total = config.iterations;
  for (std::size_t m : prefixes) total = std::max(total, m);

  // realized[i] holds window i's observation, or nothing when discarded.
  std::vector<std::optional<RankingObservation>> realized(total);
  std::vector<DiscardEvent> discards;
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    const auto anchors = sample_anchors(pool, config, rng);
    WindowPrompt prompt;
    prompt.value_name = pool.value();
    prompt.value_definition = config.value_definition;
    prompt.format = k == 2 ? PromptFormat::Binary : PromptFormat::Default;
    prompt.texts.push_back({response_id, std::string(response_text)});
    for (const VidbEntry* a : anchors) prompt.texts.push_back({a->item_id, a->text});
    rng.shuffle(prompt.texts);
    try {
      realized[i] = judge.rank(prompt, i);
    } catch (const WindowDiscarded& e) {
      discards.push_back({i, judge.id(), std::string("malformed: ") + e.what()});
    } catch (const MalformedVerdict& e) {
      discards.push_back({i, judge.id(), std::string("malformed: ") + e.what()});
    } catch (const JudgeUnavailable& e) {
      discards.push_back({i, judge.id(), std::string("unavailable: ") + e.what()});
    }
  }

  std::vector<IntensityEstimate> out;
  for (std::size_t m : prefixes) {
    std::vector<RankingObservation> used;
    for (std::size_t i = 0; i < m; ++i) {
      if (realized[i]) used.push_back(*realized[i]);
    }
    IntensityEstimate est = estimate_from_rankings(used, pool, response_id, config);
    for (const auto& d : discards) {
      if (d.window_index < m) est.discards.push_back(d);
    }
    out.push_back(std::move(est));
  }
  return out;
}

IntensityEstimate estimate_intensity(std::string_view response_text, const AnchorPool& pool,
                                     Judge& judge, const EvalConfig& config) {
  const std::size_t m = config.iterations;
  return estimate_intensity_prefixes(response_text, pool, judge, config,
                                     std::span<const std::size_t>(&m, 1))
      .front();
}

IntensityEstimate estimate_intensity(std::string_view response_text, const std::string& value,
                                     std::span<const VidbEntry> db, Judge& judge,
                                     const EvalConfig& config) {
  return estimate_intensity(response_text, AnchorPool(db, value), judge, config);
}

SteeringGain steering_gain(std::string_view default_text, std::string_view steered_text,
                           const AnchorPool& pool, Judge& judge, const EvalConfig& config) {
  SteeringGain out;
  out.default_estimate = estimate_intensity(default_text, pool, judge, config);
  out.steered_estimate = estimate_intensity(steered_text, pool, judge, config);
  out.delta = out.steered_estimate.intensity - out.default_estimate.intensity;
  return out;
}

std::vector<EvaluationOutcome> evaluate_batch(std::span<const EvaluationRequest> requests,
                                              std::span<const VidbEntry> db, Judge& judge,
                                              const EvalConfig& config) {
  config.validate();
  std::map<std::string, std::unique_ptr<AnchorPool>> pools;
  for (const auto& r : requests) {
    if (!pools.contains(r.value)) pools.emplace(r.value, std::make_unique<AnchorPool>(db, r.value));
  }
  std::vector<EvaluationOutcome> out(requests.size());
  parallel_for(requests.size(), judge.max_in_flight(), [&](std::size_t i) {
    const auto& r = requests[i];
    out[i].id = r.id;
    out[i].value = r.value;
    try {
      out[i].estimate = estimate_intensity(r.text, *pools.at(r.value), judge, config);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

}  // namespace valuerank
