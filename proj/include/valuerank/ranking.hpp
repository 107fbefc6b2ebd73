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
#include <span>
#include <string>
#include <vector>

namespace valuerank {

/// Stable identifier of a ranked text, unique within one aggregation problem.
using ItemId = std::string;

/// Latent Plackett-Luce utility per item.
using UtilityVector = std::map<ItemId, double>;

/// One judge-produced strict total order, best first.
struct RankingObservation {
  std::vector<ItemId> items;
  std::string judge_id;
  std::size_t window_index = 0;

  /// Throws InvalidArgument on fewer than two items or duplicates.
  void validate() const;

  friend bool operator==(const RankingObservation&, const RankingObservation&) = default;
};

struct FitConfig {
  double learning_rate = 0.05;
  double tolerance = 1e-5;
  int max_epochs = 50;
  double init_noise_scale = 0.01;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct FitReport {
  /// Zero-centered fitted utilities.
  UtilityVector utilities;
  /// Total log-likelihood at the initial point and after every epoch.
  std::vector<double> log_likelihood;
  int epochs = 0;
  bool converged = false;
  /// Number of times an epoch's step had to be halved to keep the
  /// log-likelihood from decreasing.
  int step_halvings = 0;
};

/// log P(ranking | utilities) under Plackett-Luce. Always <= 0.
double pl_log_probability(const RankingObservation& ranking, const UtilityVector& utilities);

/// Sum of pl_log_probability over rankings.
double pl_total_log_likelihood(std::span<const RankingObservation> rankings,
                               const UtilityVector& utilities);

/// Gradient of the summed log-likelihood with respect to every utility that
/// appears in `utilities`; entries not touched by any ranking are zero.
UtilityVector pl_gradient(std::span<const RankingObservation> rankings,
                          const UtilityVector& utilities);

/// Batch gradient ascent on the summed PL log-likelihood.
///
/// One epoch accumulates the gradient over every ranking and applies a single
/// step s <- s + learning_rate * g. Stops once the step norm drops below the
/// tolerance or after max_epochs. The result is shifted to zero mean.
FitReport fit_pl_report(std::span<const RankingObservation> rankings, const FitConfig& config);
UtilityVector fit_pl(std::span<const RankingObservation> rankings, const FitConfig& config);

/// P(i beats j) = exp(theta_i) / (exp(theta_i) + exp(theta_j)).
double bt_pairwise_probability(double theta_i, double theta_j);

}  // namespace valuerank
