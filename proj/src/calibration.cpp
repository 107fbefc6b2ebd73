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

#include "valuerank/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "valuerank/errors.hpp"
#include "valuerank/stats.hpp"

namespace valuerank {

double clip_score(double x) { return std::clamp(x, kScoreMin, kScoreMax); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("inverse_normal_cdf: u must lie in (0, 1)");
  // Acklam's rational approximation, then one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  double x;
  if (u < kLow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - kLow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int iter = 0; iter < 2; ++iter) {
    const double err = normal_cdf(x) - u;
    const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    const double t = err / density;
    x -= t / (1.0 + 0.5 * x * t);
  }
  return x;
}

CalibratedScores calibrate(const UtilityVector& utilities, const CalibrationMethod& method) {
  if (utilities.empty()) throw InvalidArgument("calibrate: no utilities");
  std::vector<double> s;
  s.reserve(utilities.size());
  for (const auto& [id, value] : utilities) {
    if (!std::isfinite(value)) throw InvalidArgument("calibrate: non-finite utility for " + id);
    s.push_back(value);
  }
  const std::size_t n = s.size();
  std::vector<double> out(n, 0.0);

  if (n > 1) {
    switch (method.kind) {
      case CalibrationKind::ZScoreMaxAbs: {
        const double mu = stats::mean(s);
        const double sigma = stats::population_sd(s);
        if (sigma >= method.epsilon) {
          double max_abs = 0.0;
          std::vector<double> z(n);
          for (std::size_t i = 0; i < n; ++i) {
            z[i] = (s[i] - mu) / sigma;
            max_abs = std::max(max_abs, std::abs(z[i]));
          }
          for (std::size_t i = 0; i < n; ++i) out[i] = clip_score(10.0 * (z[i] / max_abs));
        }
        break;
      }
      case CalibrationKind::MinMax: {
        const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
        const double range = *hi - *lo + method.epsilon;
        for (std::size_t i = 0; i < n; ++i) {
          out[i] = clip_score(20.0 * (s[i] - *lo) / range - 10.0);
        }
        break;
      }
      case CalibrationKind::QuantileGaussian: {
        const auto ranks = stats::average_ranks(s);
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) {
          q[i] = inverse_normal_cdf((ranks[i] - 0.5) / static_cast<double>(n));
        }
        const double sd = stats::population_sd(q);
        if (sd >= method.epsilon) {
          for (std::size_t i = 0; i < n; ++i) out[i] = clip_score(10.0 * q[i] / sd);
        }
        break;
      }
    }
  }

  CalibratedScores scores;
  std::size_t i = 0;
  for (const auto& [id, value] : utilities) scores.emplace_hint(scores.end(), id, out[i++]);
  return scores;
}

std::string_view to_string(CalibrationKind kind) {
  switch (kind) {
    case CalibrationKind::ZScoreMaxAbs: return "zscore";
    case CalibrationKind::MinMax: return "minmax";
    case CalibrationKind::QuantileGaussian: return "quantile";
  }
  return "zscore";
}

CalibrationKind parse_calibration_kind(std::string_view name) {
  if (name == "zscore") return CalibrationKind::ZScoreMaxAbs;
  if (name == "minmax") return CalibrationKind::MinMax;
  if (name == "quantile") return CalibrationKind::QuantileGaussian;
  throw InvalidArgument("unknown calibration method: " + std::string(name));
}

}  // namespace valuerank
