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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace valuerank {

inline constexpr std::size_t kLabelLevels = 3;

/// A unit-normalized embedding with its hierarchy labels and direction.
struct LabeledEmbedding {
  std::string id;
  std::vector<double> vector;
  /// Level 1 to 3 labels; shallower theories leave the deeper levels unset.
  std::array<std::optional<std::string>, kLabelLevels> labels;
  int direction = +1;
  /// Optional anchor assignments used by the InfoNCE terms.
  std::optional<std::string> anchor_id;
  std::optional<std::string> theory_anchor_id;
};

/// Unit-length copy; throws InvalidArgument for zero or non-finite vectors.
std::vector<double> normalized(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

/// Labels at `level` (1-based) match; two missing labels also match.
bool level_matches(const LabeledEmbedding& a, const LabeledEmbedding& b, std::size_t level);

/// Line-delimited {id, labels, direction, vector[, anchor_id, theory_anchor_id]}.
/// Vectors are normalized on ingestion and must all share one dimension.
std::vector<LabeledEmbedding> parse_embeddings(const std::string& jsonl_text);
std::vector<LabeledEmbedding> read_embeddings(const std::filesystem::path& path);

/// 0 to 4, lower meaning closer labels to the anchor.
int affinity_bin(const LabeledEmbedding& anchor, const LabeledEmbedding& other);

struct RankingAccuracy {
  double accuracy = 0.0;
  std::size_t anchors_used = 0;
  std::size_t anchors_skipped = 0;
  std::size_t pairs = 0;
};

/// Per anchor, one seeded candidate per populated bin; the share of
/// cross-bin pairs whose cosine order matches the bin order, averaged over
/// anchors. Anchors with fewer than two populated bins are skipped.
RankingAccuracy hierarchical_ranking_accuracy(std::span<const LabeledEmbedding> embeddings,
                                              std::uint64_t rng_seed);

/// Shared levels plus 0.5 for a shared direction.
double label_affinity(const LabeledEmbedding& a, const LabeledEmbedding& b);

/// Pearson correlation of cosine similarity and label affinity over i < j.
/// Empty when either series has zero variance.
std::optional<double> similarity_correlation(std::span<const LabeledEmbedding> embeddings);

struct OrthogonalityReport {
  std::vector<std::string> values;
  /// 1 - |cos| between directional vectors; the diagonal is 0.
  std::vector<std::vector<double>> matrix;
  std::optional<double> mean;
  std::optional<double> median;
  std::vector<std::string> excluded;
};

/// Groups by the label at `level` and compares positive-minus-negative
/// centroid directions.
OrthogonalityReport value_vector_orthogonality(std::span<const LabeledEmbedding> embeddings,
                                               std::size_t level);

struct ContrastiveLoss {
  double loss = 0.0;
  std::size_t anchors_used = 0;
  std::size_t anchors_skipped = 0;
};

/// L_v: positives share the level-v prefix and the direction. Anchors without
/// positives are skipped; the mean runs over the remaining anchors.
ContrastiveLoss hier_contrastive_loss(std::span<const LabeledEmbedding> batch, std::size_t level,
                                      double tau);

/// Deepest level labeled anywhere in the batch.
std::size_t label_depth(std::span<const LabeledEmbedding> batch);

/// Mean of L_v over levels 1..levels (all labeled levels when 0).
double hier_loss(std::span<const LabeledEmbedding> batch, double tau, std::size_t levels = 0);

struct AnchorSet {
  std::vector<std::string> individual_ids;
  std::vector<std::vector<double>> individual;
  std::vector<std::string> theory_ids;
  std::vector<std::vector<double>> theory;
  double tau = 0.10;
  double tau_ind = 0.07;
  double tau_theory = 0.07;
  double lambda_ind = 0.5;
  double lambda_theory = 1.0;

  void validate() const;
};

AnchorSet parse_anchor_set(const std::string& json_text);
AnchorSet read_anchor_set(const std::filesystem::path& path);

/// -log softmax(z . anchors / tau)[positive].
double info_nce(std::span<const double> z, std::span<const std::vector<double>> anchors,
                std::size_t positive, double tau);

struct AnchorLosses {
  double l_ind = 0.0;
  double l_theory = 0.0;
  double total = 0.0;  ///< l_hier + lambda_ind * l_ind + lambda_theory * l_theory
};

/// Batch items are matched to anchors through anchor_id / theory_anchor_id.
/// An empty theory set contributes zero.
AnchorLosses anchor_infonce_losses(std::span<const LabeledEmbedding> batch,
                                   const AnchorSet& anchors, double l_hier);

}  // namespace valuerank
