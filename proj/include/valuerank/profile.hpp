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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace valuerank {

struct CandidateResponse {
  std::string response_id;  ///< Defaults to the text when absent from the input.
  std::string response_text;
  double probability = 0.0;
};

struct QuestionRecord {
  std::string question_id;
  std::string group_id;
  std::vector<CandidateResponse> candidates;

  /// Nonnegative probabilities summing to at most 1 (+1e-9).
  void validate() const;
};

std::vector<QuestionRecord> parse_questions(const std::string& jsonl_text);
std::vector<QuestionRecord> read_questions(const std::filesystem::path& path);

/// Intensity of a response for a value, when one is known.
using IntensityLookup =
    std::function<std::optional<double>(const std::string& response_id, const std::string& value)>;
/// Unit embedding of a response, when one is known.
using EmbeddingLookup =
    std::function<const std::vector<double>*(const std::string& response_id)>;

/// Scores keyed by (response_id, value).
using IntensityTable = std::map<std::pair<std::string, std::string>, double>;
/// Line-delimited {response_id, value, intensity}.
IntensityTable read_intensity_table(const std::filesystem::path& path);
IntensityTable parse_intensity_table(const std::string& jsonl_text);

/// id -> unit vector, from any line-delimited file with {id, vector}.
std::map<std::string, std::vector<double>> read_vector_table(const std::filesystem::path& path);
std::map<std::string, std::vector<double>> parse_vector_table(const std::string& jsonl_text);

struct QuestionScore {
  double expected = 0.0;    ///< probability-weighted intensity
  double relevance = 0.0;   ///< probability-weighted cosine to the value
  double adjusted = 0.0;    ///< relevance * expected
  std::size_t scorable = 0;
};

/// Arithmetic core over the scorable candidates. Empty when the scorable
/// probabilities sum to zero.
std::optional<QuestionScore> weighted_intensity(std::span<const double> probabilities,
                                                std::span<const double> intensities,
                                                std::span<const double> cosines);

/// Candidates lacking an intensity or an embedding are not scorable.
std::optional<QuestionScore> question_intensity(const QuestionRecord& question,
                                                const std::string& value,
                                                const IntensityLookup& intensities,
                                                const EmbeddingLookup& embeddings,
                                                std::span<const double> value_embedding);

enum class ProfileNormalization { Raw, RowWise, ColumnWise, Hybrid };
std::string_view to_string(ProfileNormalization mode);
ProfileNormalization parse_profile_normalization(std::string_view name);

struct ProfileMatrix {
  std::vector<std::string> groups;
  std::vector<std::string> values;
  /// cells[g][v]; empty marks a cell with no scorable question.
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<std::vector<std::size_t>> counts;
  ProfileNormalization normalization = ProfileNormalization::Raw;
};

struct ProfileBuild {
  ProfileMatrix matrix;
  /// (question_id, value) pairs with no scorable candidate.
  std::vector<std::pair<std::string, std::string>> excluded;
};

/// Mean adjusted intensity per (group, value) over scorable questions.
ProfileBuild group_profiles(std::span<const QuestionRecord> questions,
                            std::span<const std::string> values,
                            const IntensityLookup& intensities, const EmbeddingLookup& embeddings,
                            const std::map<std::string, std::vector<double>>& value_embeddings);

inline constexpr double kHybridAlpha = 0.5;
inline constexpr double kHybridEpsilon = 1e-9;

ProfileMatrix normalize_profiles(const ProfileMatrix& raw, ProfileNormalization mode,
                                 double alpha = kHybridAlpha, double epsilon = kHybridEpsilon);

/// Rectangular table: header "group,<values>", missing cells left empty.
std::string profile_to_csv(const ProfileMatrix& matrix);

}  // namespace valuerank
