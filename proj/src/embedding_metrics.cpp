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

#include "valuerank/embedding_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "valuerank/errors.hpp"
#include "valuerank/jsonl.hpp"
#include "valuerank/rng.hpp"
#include "valuerank/stats.hpp"

namespace valuerank {

using nlohmann::json;

namespace {

constexpr int kBins = 5;

double log_sum_exp(std::span<const double> xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - hi);
  return hi + std::log(sum);
}

bool prefix_matches(const LabeledEmbedding& a, const LabeledEmbedding& b, std::size_t level) {
  for (std::size_t l = 1; l <= level; ++l) {
    if (!level_matches(a, b, l)) return false;
  }
  return true;
}

std::vector<double> vector_field(const json& j, std::size_t line, const char* name) {
  if (!j.is_array() || j.empty()) throw SchemaError(line, name, "expected a nonempty array");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw SchemaError(line, name, "expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> parse_anchor_list(const json& list, std::vector<std::string>& ids,
                                                   const char* name) {
  std::vector<std::vector<double>> out;
  for (const auto& a : list) {
    ids.push_back(a.at("id").get<std::string>());
    out.push_back(normalized(vector_field(a.at("vector"), 0, name)));
  }
  return out;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> normalized(std::span<const double> v) {
  const double norm = std::sqrt(dot(v, v));
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("cannot normalize vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

bool level_matches(const LabeledEmbedding& a, const LabeledEmbedding& b, std::size_t level) {
  if (level < 1 || level > kLabelLevels) throw InvalidArgument("label level outside 1..3");
  const auto& x = a.labels[level - 1];
  const auto& y = b.labels[level - 1];
  if (!x && !y) return true;
  return x && y && *x == *y;
}

std::vector<LabeledEmbedding> parse_embeddings(const std::string& jsonl_text) {
  std::vector<LabeledEmbedding> out;
  std::optional<std::size_t> dim;
  for (const auto& [line, j] : io::parse_jsonl(jsonl_text)) {
    LabeledEmbedding e;
    auto id = j.find("id");
    if (id == j.end() || !id->is_string()) throw SchemaError(line, "id", "expected a string");
    e.id = id->get<std::string>();
    auto labels = j.find("labels");
    if (labels == j.end() || !labels->is_array() || labels->size() > kLabelLevels) {
      throw SchemaError(line, "labels", "expected an array of up to 3 labels");
    }
    for (std::size_t l = 0; l < labels->size(); ++l) {
      const auto& v = (*labels)[l];
      if (v.is_null()) continue;
      if (!v.is_string()) throw SchemaError(line, "labels", "labels must be strings or null");
      e.labels[l] = v.get<std::string>();
    }
    auto d = j.find("direction");
    if (d == j.end() || !d->is_number_integer() || (d->get<int>() != 1 && d->get<int>() != -1)) {
      throw SchemaError(line, "direction", "expected -1 or +1");
    }
    e.direction = d->get<int>();
    auto vec = j.find("vector");
    if (vec == j.end()) throw SchemaError(line, "vector", "missing");
    std::vector<double> raw = vector_field(*vec, line, "vector");
    if (dim && *dim != raw.size()) {
      throw SchemaError(line, "vector", "dimension " + std::to_string(raw.size()) +
                                            " differs from " + std::to_string(*dim));
    }
    dim = raw.size();
    try {
      e.vector = normalized(raw);
    } catch (const InvalidArgument&) {
      throw SchemaError(line, "vector", "zero or non-finite vector");
    }
    if (auto a = j.find("anchor_id"); a != j.end() && a->is_string()) {
      e.anchor_id = a->get<std::string>();
    }
    if (auto t = j.find("theory_anchor_id"); t != j.end() && t->is_string()) {
      e.theory_anchor_id = t->get<std::string>();
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<LabeledEmbedding> read_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(io::read_text(path));
}

int affinity_bin(const LabeledEmbedding& anchor, const LabeledEmbedding& other) {
  if (!level_matches(anchor, other, 1)) return 4;
  if (!level_matches(anchor, other, 2)) return 3;
  if (!level_matches(anchor, other, 3)) return 2;
  return other.direction == anchor.direction ? 0 : 1;
}

RankingAccuracy hierarchical_ranking_accuracy(std::span<const LabeledEmbedding> embeddings,
                                              std::uint64_t rng_seed) {
  if (embeddings.size() < 3) throw InvalidArgument("need at least 3 embeddings");
  RankingAccuracy out;
  double sum = 0.0;
  for (std::size_t a = 0; a < embeddings.size(); ++a) {
    std::array<std::vector<std::size_t>, kBins> bins;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      if (i != a) bins[affinity_bin(embeddings[a], embeddings[i])].push_back(i);
    }
    // Candidate draws depend on labels only, never on the vectors.
    Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(a)));
    std::vector<std::pair<int, double>> picks;
    for (int b = 0; b < kBins; ++b) {
      if (bins[b].empty()) continue;
      const std::size_t pick = bins[b][rng.uniform_index(bins[b].size())];
      picks.emplace_back(b, dot(embeddings[a].vector, embeddings[pick].vector));
    }
    if (picks.size() < 2) {
      ++out.anchors_skipped;
      continue;
    }
    std::size_t correct = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < picks.size(); ++i) {
      for (std::size_t j = i + 1; j < picks.size(); ++j) {
        // picks are in ascending bin order, so i is the closer bin.
        ++pairs;
        if (picks[i].second > picks[j].second) ++correct;
      }
    }
    sum += static_cast<double>(correct) / static_cast<double>(pairs);
    out.pairs += pairs;
    ++out.anchors_used;
  }
  if (out.anchors_used == 0) throw InvalidArgument("no anchor has two populated bins");
  out.accuracy = sum / static_cast<double>(out.anchors_used);
  return out;
}

double label_affinity(const LabeledEmbedding& a, const LabeledEmbedding& b) {
  double y = 0.0;
  for (std::size_t l = 1; l <= kLabelLevels; ++l) y += level_matches(a, b, l) ? 1.0 : 0.0;
  return y + (a.direction == b.direction ? 0.5 : 0.0);
}

std::optional<double> similarity_correlation(std::span<const LabeledEmbedding> embeddings) {
  if (embeddings.size() < 3) throw InvalidArgument("need at least 3 embeddings");
  std::vector<double> s;
  std::vector<double> y;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      s.push_back(dot(embeddings[i].vector, embeddings[j].vector));
      y.push_back(label_affinity(embeddings[i], embeddings[j]));
    }
  }
  return stats::pearson(s, y);
}

OrthogonalityReport value_vector_orthogonality(std::span<const LabeledEmbedding> embeddings,
                                               std::size_t level) {
  if (level < 1 || level > kLabelLevels) throw InvalidArgument("label level outside 1..3");
  struct Sums {
    std::vector<double> pos;
    std::vector<double> neg;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
  };
  std::map<std::string, Sums> groups;
  for (const auto& e : embeddings) {
    const auto& label = e.labels[level - 1];
    if (!label) continue;
    Sums& g = groups[*label];
    auto& acc = e.direction > 0 ? g.pos : g.neg;
    if (acc.empty()) acc.assign(e.vector.size(), 0.0);
    for (std::size_t i = 0; i < e.vector.size(); ++i) acc[i] += e.vector[i];
    ++(e.direction > 0 ? g.n_pos : g.n_neg);
  }

  OrthogonalityReport out;
  std::vector<std::vector<double>> directions;
  for (auto& [name, g] : groups) {
    if (g.n_pos == 0 || g.n_neg == 0) {
      out.excluded.push_back(name);
      continue;
    }
    try {
      // Normalizing the sums equals normalizing the means.
      const auto cp = normalized(g.pos);
      const auto cn = normalized(g.neg);
      std::vector<double> diff(cp.size());
      for (std::size_t i = 0; i < cp.size(); ++i) diff[i] = cp[i] - cn[i];
      directions.push_back(normalized(diff));
      out.values.push_back(name);
    } catch (const InvalidArgument&) {
      out.excluded.push_back(name);
    }
  }
  const std::size_t n = directions.size();
  out.matrix.assign(n, std::vector<double>(n, 0.0));
  std::vector<double> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = std::clamp(dot(directions[i], directions[j]), -1.0, 1.0);
      out.matrix[i][j] = out.matrix[j][i] = 1.0 - std::abs(c);
      pairs.push_back(out.matrix[i][j]);
    }
  }
  if (!pairs.empty()) {
    out.mean = stats::mean(pairs);
    out.median = stats::median(pairs);
  }
  return out;
}

ContrastiveLoss hier_contrastive_loss(std::span<const LabeledEmbedding> batch, std::size_t level,
                                      double tau) {
  if (batch.size() < 2) throw InvalidArgument("batch needs at least 2 items");
  if (!(tau > 0.0)) throw InvalidArgument("temperature must be > 0");
  if (level < 1 || level > kLabelLevels) throw InvalidArgument("label level outside 1..3");
  ContrastiveLoss out;
  double sum = 0.0;
  std::vector<double> logits;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    logits.clear();
    std::vector<std::size_t> positives;
    for (std::size_t a = 0; a < batch.size(); ++a) {
      if (a == i) continue;
      logits.push_back(dot(batch[i].vector, batch[a].vector) / tau);
      if (batch[a].direction == batch[i].direction && prefix_matches(batch[i], batch[a], level)) {
        positives.push_back(logits.size() - 1);
      }
    }
    if (positives.empty()) {
      ++out.anchors_skipped;
      continue;
    }
    const double norm = log_sum_exp(logits);
    double anchor = 0.0;
    for (std::size_t p : positives) anchor += norm - logits[p];
    sum += anchor / static_cast<double>(positives.size());
    ++out.anchors_used;
  }
  if (out.anchors_used == 0) throw InvalidArgument("no anchor in the batch has a positive");
  out.loss = sum / static_cast<double>(out.anchors_used);
  return out;
}

std::size_t label_depth(std::span<const LabeledEmbedding> batch) {
  std::size_t depth = 0;
  for (const auto& e : batch) {
    for (std::size_t l = 0; l < kLabelLevels; ++l) {
      if (e.labels[l]) depth = std::max(depth, l + 1);
    }
  }
  return depth;
}

double hier_loss(std::span<const LabeledEmbedding> batch, double tau, std::size_t levels) {
  if (levels == 0) levels = label_depth(batch);
  if (levels == 0) throw InvalidArgument("batch carries no labels");
  double sum = 0.0;
  for (std::size_t v = 1; v <= levels; ++v) sum += hier_contrastive_loss(batch, v, tau).loss;
  return sum / static_cast<double>(levels);
}

void AnchorSet::validate() const {
  if (individual.empty()) throw InvalidArgument("anchor set without individual anchors");
  if (individual.size() != individual_ids.size() || theory.size() != theory_ids.size()) {
    throw InvalidArgument("anchor ids and vectors differ in count");
  }
  for (double t : {tau, tau_ind, tau_theory}) {
    if (!(t > 0.0)) throw InvalidArgument("temperatures must be > 0");
  }
  if (lambda_ind < 0.0 || lambda_theory < 0.0) throw InvalidArgument("weights must be >= 0");
}

AnchorSet parse_anchor_set(const std::string& json_text) {
  AnchorSet out;
  try {
    const json j = json::parse(json_text);
    out.tau = j.value("tau", out.tau);
    out.tau_ind = j.value("tau_ind", out.tau_ind);
    out.tau_theory = j.value("tau_theory", out.tau_theory);
    out.lambda_ind = j.value("lambda_ind", out.lambda_ind);
    out.lambda_theory = j.value("lambda_theory", out.lambda_theory);
    out.individual = parse_anchor_list(j.at("individual"), out.individual_ids, "individual");
    if (auto t = j.find("theory"); t != j.end()) {
      out.theory = parse_anchor_list(*t, out.theory_ids, "theory");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("invalid anchor set: ") + e.what());
  }
  out.validate();
  return out;
}

AnchorSet read_anchor_set(const std::filesystem::path& path) {
  return parse_anchor_set(io::read_text(path));
}

double info_nce(std::span<const double> z, std::span<const std::vector<double>> anchors,
                std::size_t positive, double tau) {
  if (positive >= anchors.size()) throw InvalidArgument("positive anchor out of range");
  if (!(tau > 0.0)) throw InvalidArgument("temperature must be > 0");
  std::vector<double> logits;
  logits.reserve(anchors.size());
  for (const auto& a : anchors) logits.push_back(dot(z, a) / tau);
  return log_sum_exp(logits) - logits[positive];
}

AnchorLosses anchor_infonce_losses(std::span<const LabeledEmbedding> batch,
                                   const AnchorSet& anchors, double l_hier) {
  anchors.validate();
  if (batch.empty()) throw InvalidArgument("empty batch");
  auto position = [](const std::vector<std::string>& ids, const std::optional<std::string>& id,
                     const std::string& item) {
    if (!id) throw InvalidArgument("missing anchor assignment for " + item);
    auto it = std::find(ids.begin(), ids.end(), *id);
    if (it == ids.end()) throw InvalidArgument("unknown anchor '" + *id + "' for " + item);
    return static_cast<std::size_t>(it - ids.begin());
  };
  AnchorLosses out;
  for (const auto& e : batch) {
    out.l_ind += info_nce(e.vector, anchors.individual,
                          position(anchors.individual_ids, e.anchor_id, e.id), anchors.tau_ind);
    if (!anchors.theory.empty()) {
      out.l_theory += info_nce(e.vector, anchors.theory,
                               position(anchors.theory_ids, e.theory_anchor_id, e.id),
                               anchors.tau_theory);
    }
  }
  const double n = static_cast<double>(batch.size());
  out.l_ind /= n;
  out.l_theory /= n;
  out.total = l_hier + anchors.lambda_ind * out.l_ind + anchors.lambda_theory * out.l_theory;
  return out;
}

}  // namespace valuerank
