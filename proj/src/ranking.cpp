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

#include "valuerank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "valuerank/errors.hpp"
#include "valuerank/rng.hpp"

namespace valuerank {

namespace {

// Rankings translated to dense indices so the fitting loop avoids map lookups.
struct IndexedProblem {
  std::vector<ItemId> ids;
  std::vector<std::vector<std::size_t>> rankings;
};

IndexedProblem index_rankings(std::span<const RankingObservation> rankings) {
  IndexedProblem problem;
  std::set<ItemId> all;
  for (const auto& r : rankings) {
    r.validate();
    all.insert(r.items.begin(), r.items.end());
  }
  problem.ids.assign(all.begin(), all.end());
  std::unordered_map<ItemId, std::size_t> position;
  for (std::size_t i = 0; i < problem.ids.size(); ++i) position.emplace(problem.ids[i], i);
  problem.rankings.reserve(rankings.size());
  for (const auto& r : rankings) {
    std::vector<std::size_t> idx;
    idx.reserve(r.items.size());
    for (const auto& item : r.items) idx.push_back(position.at(item));
    problem.rankings.push_back(std::move(idx));
  }
  return problem;
}

// log P for one ranking over dense utilities; scratch must hold k doubles.
double log_probability_dense(const std::vector<std::size_t>& ranking,
                             const std::vector<double>& s, std::vector<double>& scratch) {
  const std::size_t k = ranking.size();
  double top = -INFINITY;
  for (std::size_t idx : ranking) top = std::max(top, s[idx]);
  scratch.resize(k);
  for (std::size_t j = 0; j < k; ++j) scratch[j] = std::exp(s[ranking[j]] - top);
  double tail = 0.0;
  double total = 0.0;
  for (std::size_t j = k; j-- > 0;) {
    tail += scratch[j];
    total += (s[ranking[j]] - top) - std::log(tail);
  }
  return total;
}

// Accumulates one ranking's gradient into g. The item at position l receives
// 1 - e_l * sum_{j<=l} 1/D_j, which equals the stage-wise updates
// g[i_j] += 1 - e_j/D_j and g[i_l] -= e_l/D_j for l > j.
void accumulate_gradient_dense(const std::vector<std::size_t>& ranking,
                               const std::vector<double>& s, std::vector<double>& g,
                               std::vector<double>& e, std::vector<double>& denom) {
  const std::size_t k = ranking.size();
  double top = -INFINITY;
  for (std::size_t idx : ranking) top = std::max(top, s[idx]);
  e.resize(k);
  denom.resize(k);
  for (std::size_t j = 0; j < k; ++j) e[j] = std::exp(s[ranking[j]] - top);
  double tail = 0.0;
  for (std::size_t j = k; j-- > 0;) {
    tail += e[j];
    denom[j] = tail;
  }
  double inv_prefix = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    inv_prefix += 1.0 / denom[l];
    g[ranking[l]] += 1.0 - e[l] * inv_prefix;
  }
}

double total_dense(const IndexedProblem& p, const std::vector<double>& s,
                   std::vector<double>& scratch) {
  double total = 0.0;
  for (const auto& r : p.rankings) total += log_probability_dense(r, s, scratch);
  return total;
}

void check_finite(const ItemId& id, double value) {
  if (!std::isfinite(value)) throw InvalidArgument("non-finite utility for item " + id);
}

}  // namespace

void RankingObservation::validate() const {
  if (items.size() < 2) throw InvalidArgument("ranking must contain at least two items");
  std::set<ItemId> seen;
  for (const auto& id : items) {
    if (!seen.insert(id).second) throw InvalidArgument("duplicate item in ranking: " + id);
  }
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  if (!(init_noise_scale >= 0.0)) throw InvalidArgument("init_noise_scale must be >= 0");
}

double pl_log_probability(const RankingObservation& ranking, const UtilityVector& utilities) {
  ranking.validate();
  std::vector<double> s;
  std::vector<std::size_t> idx;
  s.reserve(ranking.items.size());
  for (const auto& id : ranking.items) {
    auto it = utilities.find(id);
    if (it == utilities.end()) throw MissingItem(id);
    check_finite(id, it->second);
    idx.push_back(s.size());
    s.push_back(it->second);
  }
  std::vector<double> scratch;
  return std::min(0.0, log_probability_dense(idx, s, scratch));
}

double pl_total_log_likelihood(std::span<const RankingObservation> rankings,
                               const UtilityVector& utilities) {
  double total = 0.0;
  for (const auto& r : rankings) total += pl_log_probability(r, utilities);
  return total;
}

UtilityVector pl_gradient(std::span<const RankingObservation> rankings,
                          const UtilityVector& utilities) {
  if (rankings.empty()) throw InvalidArgument("pl_gradient requires at least one ranking");
  std::vector<ItemId> ids;
  std::vector<double> s;
  std::unordered_map<ItemId, std::size_t> position;
  for (const auto& [id, value] : utilities) {
    check_finite(id, value);
    position.emplace(id, ids.size());
    ids.push_back(id);
    s.push_back(value);
  }
  std::vector<double> g(s.size(), 0.0), e, denom;
  std::vector<std::size_t> idx;
  for (const auto& r : rankings) {
    r.validate();
    idx.clear();
    for (const auto& id : r.items) {
      auto it = position.find(id);
      if (it == position.end()) throw MissingItem(id);
      idx.push_back(it->second);
    }
    accumulate_gradient_dense(idx, s, g, e, denom);
  }
  UtilityVector out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace_hint(out.end(), ids[i], g[i]);
  return out;
}

FitReport fit_pl_report(std::span<const RankingObservation> rankings, const FitConfig& config) {
  config.validate();
  if (rankings.empty()) throw InvalidArgument("fit_pl requires at least one ranking");
  const IndexedProblem problem = index_rankings(rankings);
  const std::size_t n = problem.ids.size();

  Rng rng(config.rng_seed);
  std::vector<double> s(n);
  for (auto& v : s) v = config.init_noise_scale * rng.normal();

  FitReport report;
  std::vector<double> scratch, e, denom, g(n), candidate(n);
  double current = total_dense(problem, s, scratch);
  report.log_likelihood.push_back(current);

  double step = config.learning_rate;
  constexpr double kMonotoneSlack = 1e-9;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& r : problem.rankings) accumulate_gradient_dense(r, s, g, e, denom);

    double next = 0.0;
    double step_norm = 0.0;
    for (;;) {
      step_norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        candidate[i] = s[i] + step * g[i];
        step_norm += (step * g[i]) * (step * g[i]);
      }
      step_norm = std::sqrt(step_norm);
      next = total_dense(problem, candidate, scratch);
      // A step too large for the local curvature can overshoot; halve it.
      if (next >= current - kMonotoneSlack || step_norm < config.tolerance) break;
      step *= 0.5;
      ++report.step_halvings;
    }
    s.swap(candidate);
    current = next;
    report.log_likelihood.push_back(current);
    report.epochs = epoch + 1;
    if (step_norm < config.tolerance) {
      report.converged = true;
      break;
    }
  }

  double centre = 0.0;
  for (double v : s) centre += v;
  centre /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.utilities.emplace_hint(report.utilities.end(), problem.ids[i], s[i] - centre);
  }
  return report;
}

UtilityVector fit_pl(std::span<const RankingObservation> rankings, const FitConfig& config) {
  return fit_pl_report(rankings, config).utilities;
}

double bt_pairwise_probability(double theta_i, double theta_j) {
  if (!std::isfinite(theta_i) || !std::isfinite(theta_j)) {
    throw InvalidArgument("bt_pairwise_probability: non-finite input");
  }
  const double d = theta_i - theta_j;
  if (d >= 0) return 1.0 / (1.0 + std::exp(-d));
  const double ed = std::exp(d);
  return ed / (1.0 + ed);
}

}  // namespace valuerank
