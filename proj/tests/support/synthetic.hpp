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
#include <memory>
#include <string>
#include <vector>

#include "valuerank/judge.hpp"
#include "valuerank/vidb.hpp"

namespace valuerank::testing {

/// Anchors with z-score calibrated scores and responses with planted
/// utilities, all on one value. Simulated judges see DB scores as truth.
struct SyntheticSuite {
  std::string value = "benevolence";
  std::vector<VidbEntry> anchors;
  std::vector<std::string> responses;
  std::vector<double> planted;
  std::shared_ptr<SimulatedTruth> truth;
};

SyntheticSuite make_synthetic_suite(std::size_t n_anchors, std::size_t n_responses,
                                    std::uint64_t seed);

/// For each target score, the id of the closest anchor not already chosen.
std::vector<ItemId> nearest_panel(const std::vector<VidbEntry>& anchors,
                                  const std::vector<double>& targets);

JudgeSpec simulated_spec(double noise_scale, std::uint64_t seed, int max_in_flight = 8);

}  // namespace valuerank::testing
