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

#include <gtest/gtest.h>

#include <cmath>

#include "valuerank/calibration.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/rng.hpp"

namespace valuerank {
namespace {

TEST(Calibrate, ZScoreSymmetricExtremes) {
  const auto s = calibrate({{"a", -3}, {"b", 0}, {"c", 3}});
  EXPECT_DOUBLE_EQ(s.at("a"), -10.0);
  EXPECT_DOUBLE_EQ(s.at("b"), 0.0);
  EXPECT_DOUBLE_EQ(s.at("c"), 10.0);
}

TEST(Calibrate, MinMaxEndpoints) {
  const auto s = calibrate({{"a", 2}, {"b", 7}}, {CalibrationKind::MinMax});
  EXPECT_NEAR(s.at("a"), -10.0, 1e-12);
  EXPECT_NEAR(s.at("b"), 10.0, 1e-7);
  EXPECT_LE(s.at("b"), 10.0);
}

TEST(Calibrate, QuantileFourEquallySpaced) {
  // u = (0.125, 0.375, 0.625, 0.875); q / sd(q) with the population sd, then
  // clipped. Frozen from a 50-digit evaluation.
  const auto s = calibrate({{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}}, {CalibrationKind::QuantileGaussian});
  EXPECT_DOUBLE_EQ(s.at("a"), -10.0);
  EXPECT_NEAR(s.at("b"), -3.775132302531261, 1e-12);
  EXPECT_NEAR(s.at("c"), 3.775132302531261, 1e-12);
  EXPECT_DOUBLE_EQ(s.at("d"), 10.0);
}

TEST(Calibrate, QuantileTiesShareAverageRank) {
  const auto s = calibrate({{"a", 1}, {"b", 2}, {"c", 2}, {"d", 5}}, {CalibrationKind::QuantileGaussian});
  EXPECT_EQ(s.at("b"), s.at("c"));
  EXPECT_LT(s.at("a"), s.at("b"));
  EXPECT_LT(s.at("c"), s.at("d"));
}

TEST(Calibrate, DegenerateInputs) {
  for (CalibrationKind kind : {CalibrationKind::ZScoreMaxAbs, CalibrationKind::MinMax,
                               CalibrationKind::QuantileGaussian}) {
    EXPECT_EQ(calibrate({{"only", 3.5}}, {kind}).at("only"), 0.0);
  }
  const auto flat = calibrate({{"a", 1}, {"b", 1}, {"c", 1}});
  for (const auto& [id, v] : flat) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(calibrate({}), InvalidArgument);
  EXPECT_THROW(calibrate({{"a", NAN}, {"b", 1}}), InvalidArgument);
}

TEST(CalibrateProperty, MonotoneBoundedAndExtremal) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    UtilityVector u;
    const std::size_t n = 2 + rng.uniform_index(60);
    for (std::size_t i = 0; i < n; ++i) u["x" + std::to_string(i)] = 3.0 * rng.normal();
    for (CalibrationKind kind : {CalibrationKind::ZScoreMaxAbs, CalibrationKind::MinMax,
                                 CalibrationKind::QuantileGaussian}) {
      const auto s = calibrate(u, {kind});
      double peak = 0.0;
      for (const auto& [a, ua] : u) {
        ASSERT_GE(s.at(a), -10.0);
        ASSERT_LE(s.at(a), 10.0);
        peak = std::max(peak, std::abs(s.at(a)));
        for (const auto& [b, ub] : u) {
          if (ua <= ub) continue;
          if (kind == CalibrationKind::QuantileGaussian) {
            ASSERT_GE(s.at(a), s.at(b));
          } else {
            ASSERT_GT(s.at(a), s.at(b));
          }
        }
      }
      if (kind == CalibrationKind::ZScoreMaxAbs) EXPECT_EQ(peak, 10.0);
    }
  }
}

TEST(CalibrateProperty, MinMaxAffineRobustness) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    UtilityVector u, v;
    const double scale = 0.5 + 5.0 * rng.uniform01();
    const double shift = 10.0 * rng.normal();
    for (int i = 0; i < 20; ++i) {
      const std::string id = "x" + std::to_string(i);
      u[id] = 3.0 * rng.normal();
      v[id] = scale * u[id] + shift;
    }
    const auto a = calibrate(u, {CalibrationKind::MinMax});
    const auto b = calibrate(v, {CalibrationKind::MinMax});
    for (const auto& [id, x] : a) EXPECT_NEAR(x, b.at(id), 1e-6);
  }
}

TEST(CalibrateProperty, QuantileDependsOnlyOnRanks) {
  Rng rng(4);
  UtilityVector u, warped;
  for (int i = 0; i < 30; ++i) {
    const std::string id = "x" + std::to_string(i);
    u[id] = rng.normal();
    warped[id] = std::exp(3.0 * u[id]) - 7.0;
  }
  EXPECT_EQ(calibrate(u, {CalibrationKind::QuantileGaussian}),
            calibrate(warped, {CalibrationKind::QuantileGaussian}));
}

TEST(InverseNormalCdf, Values) {
  EXPECT_EQ(inverse_normal_cdf(0.5), 0.0);
  EXPECT_NEAR(inverse_normal_cdf(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(inverse_normal_cdf(0.875), 1.150349380376008, 1e-12);
  EXPECT_NEAR(inverse_normal_cdf(0.625), 0.3186393639643752, 1e-12);
  EXPECT_THROW(inverse_normal_cdf(0.0), InvalidArgument);
  EXPECT_THROW(inverse_normal_cdf(1.0), InvalidArgument);
  EXPECT_THROW(inverse_normal_cdf(NAN), InvalidArgument);
}

TEST(InverseNormalCdfProperty, RoundTripAndSymmetry) {
  for (double u = 1e-12; u < 1.0; u = u < 0.01 ? u * 3.0 : u + 0.0137) {
    const double x = inverse_normal_cdf(u);
    EXPECT_LT(std::abs(normal_cdf(x) - u), 1e-10) << u;
    // 1 - u is exact only away from the far tail.
    if (u >= 1e-4) EXPECT_NEAR(inverse_normal_cdf(1.0 - u), -x, 1e-9) << u;
  }
}

TEST(CalibrationKind, Names) {
  EXPECT_EQ(parse_calibration_kind("quantile"), CalibrationKind::QuantileGaussian);
  EXPECT_EQ(to_string(CalibrationKind::MinMax), "minmax");
  EXPECT_THROW(parse_calibration_kind("sigmoid"), InvalidArgument);
  EXPECT_EQ(CalibrationMethod{}.kind, CalibrationKind::ZScoreMaxAbs);
}

}  // namespace
}  // namespace valuerank
