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

#include "valuerank/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "valuerank/embedding_metrics.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/jsonl.hpp"
#include "valuerank/stats.hpp"

namespace valuerank {

namespace {

constexpr double kMassSlack = 1e-9;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Applies fn to every present cell of column v.
template <class Fn>
void for_column(ProfileMatrix& m, std::size_t v, Fn fn) {
  for (auto& row : m.cells) {
    if (row[v]) fn(*row[v]);
  }
}

}  // namespace

void QuestionRecord::validate() const {
  double mass = 0.0;
  for (const auto& c : candidates) {
    if (!(c.probability >= 0.0) || !std::isfinite(c.probability)) {
      throw InvalidArgument("negative choice probability in question " + question_id);
    }
    mass += c.probability;
  }
  if (mass > 1.0 + kMassSlack) {
    throw InvalidArgument("choice probabilities exceed 1 in question " + question_id);
  }
}

std::vector<QuestionRecord> parse_questions(const std::string& jsonl_text) {
  std::vector<QuestionRecord> out;
  for (const auto& [line, j] : io::parse_jsonl(jsonl_text)) {
    QuestionRecord q;
    try {
      q.question_id = j.at("question_id").get<std::string>();
      q.group_id = j.at("group_id").get<std::string>();
      for (const auto& c : j.at("candidates")) {
        CandidateResponse r;
        r.response_text = c.at("response_text").get<std::string>();
        r.response_id = c.value("response_id", r.response_text);
        r.probability = c.at("choice_probability").get<double>();
        q.candidates.push_back(std::move(r));
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line, "<question>", e.what());
    }
    try {
      q.validate();
    } catch (const InvalidArgument& e) {
      throw SchemaError(line, "candidates", e.what());
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QuestionRecord> read_questions(const std::filesystem::path& path) {
  return parse_questions(io::read_text(path));
}

IntensityTable parse_intensity_table(const std::string& jsonl_text) {
  IntensityTable out;
  for (const auto& [line, j] : io::parse_jsonl(jsonl_text)) {
    try {
      out[{j.at("response_id").get<std::string>(), j.at("value").get<std::string>()}] =
          j.at("intensity").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line, "<score>", e.what());
    }
  }
  return out;
}

IntensityTable read_intensity_table(const std::filesystem::path& path) {
  return parse_intensity_table(io::read_text(path));
}

std::map<std::string, std::vector<double>> parse_vector_table(const std::string& jsonl_text) {
  std::map<std::string, std::vector<double>> out;
  std::optional<std::size_t> dim;
  for (const auto& [line, j] : io::parse_jsonl(jsonl_text)) {
    std::vector<double> v;
    std::string id;
    try {
      id = j.at("id").get<std::string>();
      v = j.at("vector").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line, "<vector>", e.what());
    }
    if (dim && *dim != v.size()) throw SchemaError(line, "vector", "mixed dimensions");
    dim = v.size();
    try {
      out[id] = normalized(v);
    } catch (const InvalidArgument&) {
      throw SchemaError(line, "vector", "zero or non-finite vector");
    }
  }
  return out;
}

std::map<std::string, std::vector<double>> read_vector_table(const std::filesystem::path& path) {
  return parse_vector_table(io::read_text(path));
}

std::optional<QuestionScore> weighted_intensity(std::span<const double> probabilities,
                                                std::span<const double> intensities,
                                                std::span<const double> cosines) {
  if (probabilities.size() != intensities.size() || probabilities.size() != cosines.size()) {
    throw InvalidArgument("candidate arrays differ in length");
  }
  double mass = 0.0;
  for (double p : probabilities) mass += p;
  if (!(mass > 0.0)) return std::nullopt;
  QuestionScore out;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double w = probabilities[i] / mass;
    out.expected += w * intensities[i];
    out.relevance += w * cosines[i];
  }
  out.adjusted = out.relevance * out.expected;
  out.scorable = probabilities.size();
  return out;
}

std::optional<QuestionScore> question_intensity(const QuestionRecord& question,
                                                const std::string& value,
                                                const IntensityLookup& intensities,
                                                const EmbeddingLookup& embeddings,
                                                std::span<const double> value_embedding) {
  std::vector<double> p;
  std::vector<double> score;
  std::vector<double> cosine;
  for (const auto& c : question.candidates) {
    const auto intensity = intensities(c.response_id, value);
    const auto* h = embeddings(c.response_id);
    if (!intensity || !h) continue;
    p.push_back(c.probability);
    score.push_back(*intensity);
    cosine.push_back(dot(*h, value_embedding));
  }
  return weighted_intensity(p, score, cosine);
}

std::string_view to_string(ProfileNormalization mode) {
  switch (mode) {
    case ProfileNormalization::Raw: return "raw";
    case ProfileNormalization::RowWise: return "row";
    case ProfileNormalization::ColumnWise: return "column";
    case ProfileNormalization::Hybrid: return "hybrid";
  }
  return "?";
}

ProfileNormalization parse_profile_normalization(std::string_view name) {
  if (name == "raw") return ProfileNormalization::Raw;
  if (name == "row" || name == "rowwise") return ProfileNormalization::RowWise;
  if (name == "column" || name == "columnwise") return ProfileNormalization::ColumnWise;
  if (name == "hybrid") return ProfileNormalization::Hybrid;
  throw InvalidArgument("unknown normalization: " + std::string(name));
}

ProfileBuild group_profiles(std::span<const QuestionRecord> questions,
                            std::span<const std::string> values,
                            const IntensityLookup& intensities, const EmbeddingLookup& embeddings,
                            const std::map<std::string, std::vector<double>>& value_embeddings) {
  ProfileBuild out;
  ProfileMatrix& m = out.matrix;
  m.values.assign(values.begin(), values.end());
  for (const auto& q : questions) {
    if (std::find(m.groups.begin(), m.groups.end(), q.group_id) == m.groups.end()) {
      m.groups.push_back(q.group_id);
    }
  }
  std::vector<std::vector<double>> sums(m.groups.size(), std::vector<double>(values.size(), 0.0));
  m.counts.assign(m.groups.size(), std::vector<std::size_t>(values.size(), 0));
  for (std::size_t v = 0; v < values.size(); ++v) {
    auto e = value_embeddings.find(values[v]);
    if (e == value_embeddings.end()) throw MissingItem("value embedding: " + values[v]);
    for (const auto& q : questions) {
      const auto g = static_cast<std::size_t>(
          std::find(m.groups.begin(), m.groups.end(), q.group_id) - m.groups.begin());
      const auto score = question_intensity(q, values[v], intensities, embeddings, e->second);
      if (!score) {
        out.excluded.emplace_back(q.question_id, values[v]);
        continue;
      }
      sums[g][v] += score->adjusted;
      ++m.counts[g][v];
    }
  }
  m.cells.assign(m.groups.size(), std::vector<std::optional<double>>(values.size()));
  for (std::size_t g = 0; g < m.groups.size(); ++g) {
    for (std::size_t v = 0; v < values.size(); ++v) {
      if (m.counts[g][v] > 0) {
        m.cells[g][v] = sums[g][v] / static_cast<double>(m.counts[g][v]);
      }
    }
  }
  return out;
}

ProfileMatrix normalize_profiles(const ProfileMatrix& raw, ProfileNormalization mode, double alpha,
                                 double epsilon) {
  if (raw.groups.empty() || raw.values.empty()) throw InvalidArgument("empty profile matrix");
  if (alpha < 0.0 || alpha > 1.0) throw InvalidArgument("alpha outside [0, 1]");
  ProfileMatrix out = raw;
  out.normalization = mode;
  switch (mode) {
    case ProfileNormalization::Raw:
      break;
    case ProfileNormalization::RowWise:
      for (auto& row : out.cells) {
        double hi = 0.0;
        for (const auto& c : row) {
          if (c) hi = std::max(hi, std::abs(*c));
        }
        for (auto& c : row) {
          if (c) *c = hi > 0.0 ? *c / hi : 0.0;
        }
      }
      break;
    case ProfileNormalization::ColumnWise:
    case ProfileNormalization::Hybrid:
      for (std::size_t v = 0; v < out.values.size(); ++v) {
        std::vector<double> column;
        for_column(out, v, [&](double x) { column.push_back(x); });
        double hi = 0.0;
        for (double x : column) hi = std::max(hi, std::abs(x));
        if (hi == 0.0) {
          for_column(out, v, [](double& x) { x = 0.0; });
          continue;
        }
        if (mode == ProfileNormalization::ColumnWise) {
          for_column(out, v, [&](double& x) { x /= hi; });
          continue;
        }
        const auto ranks = stats::average_ranks(column);
        const double n = static_cast<double>(column.size());
        std::size_t i = 0;
        for_column(out, v, [&](double& x) {
          const double pct = ranks[i++] / n;
          x = alpha * x / (hi + epsilon) + (1.0 - alpha) * (2.0 * pct - 1.0);
        });
      }
      break;
  }
  return out;
}

std::string profile_to_csv(const ProfileMatrix& m) {
  std::string out = "group";
  for (const auto& v : m.values) out += "," + csv_field(v);
  out += "\n";
  char buf[32];
  for (std::size_t g = 0; g < m.groups.size(); ++g) {
    out += csv_field(m.groups[g]);
    for (const auto& c : m.cells[g]) {
      out += ",";
      if (c) {
        std::snprintf(buf, sizeof buf, "%.17g", *c);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace valuerank
