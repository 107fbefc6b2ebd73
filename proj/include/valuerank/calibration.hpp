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

#include <map>
#include <string>
#include <string_view>

#include "valuerank/ranking.hpp"

namespace valuerank {

enum class CalibrationKind { ZScoreMaxAbs, MinMax, QuantileGaussian };

struct CalibrationMethod {
  CalibrationKind kind = CalibrationKind::ZScoreMaxAbs;
  double epsilon = 1e-9;
};

/// Scores on the common [-10, 10] intensity scale.
using CalibratedScores = std::map<ItemId, double>;

inline constexpr double kScoreMin = -10.0;
inline constexpr double kScoreMax = 10.0;

double clip_score(double x);

/// Maps raw utilities onto [-10, 10]. Order-preserving in every mode.
CalibratedScores calibrate(const UtilityVector& utilities, const CalibrationMethod& method = {});

/// Standard normal quantile function; throws InvalidArgument outside (0, 1).
double inverse_normal_cdf(double u);

/// Standard normal CDF.
double normal_cdf(double x);

std::string_view to_string(CalibrationKind kind);
/// Accepts "zscore", "minmax", "quantile".
CalibrationKind parse_calibration_kind(std::string_view name);

}  // namespace valuerank
