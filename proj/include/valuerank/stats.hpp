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

#include <optional>
#include <span>
#include <vector>

namespace valuerank::stats {

double mean(std::span<const double> xs);

/// Population standard deviation (denominator n).
double population_sd(std::span<const double> xs);
double population_variance(std::span<const double> xs);

/// 1-based ranks, ascending; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> xs);

/// Pearson correlation; nullopt when either series has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

/// Kendall tau-b.
std::optional<double> kendall_tau(std::span<const double> xs, std::span<const double> ys);

/// Linear-interpolation quantile, q in [0, 1] (numpy's default).
double quantile(std::vector<double> xs, double q);
double median(std::vector<double> xs);

}  // namespace valuerank::stats
