// Copyright 2026 The AML Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Poincare embedding training with negative sampling.
//
// For a positive pair (u, v) with weight w and sampled non-neighbors N of u,
//
//   loss = w * ( d(u,v) + log sum_{x in N + {v}} exp(-d(u,x)) ),
//
// i.e. the softmax cross-entropy of picking v among {v} + N, scaled by the
// edge weight. With no negatives available the loss is w * d(u,v).
//
// Each step rescales the Euclidean gradient by (1 - |theta|^2)^2 / 4, takes
// a fixed step and retracts into the ball of radius 1 - eps.

#ifndef AMLWB_EMBED_TRAIN_HPP_
#define AMLWB_EMBED_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlwb/entity_graph.hpp"
#include "amlwb/hyperbolic.hpp"
#include "amlwb/rng.hpp"

namespace amlwb::train {

enum class WeightScaling {
  kNone,  // raw edge weight
  kMean,  // weight / mean weight over the edge list
};

struct TrainConfig {
  std::size_t dim = hyperbolic::kDefaultDim;
  int epochs = 80;
  double learning_rate = 0.1;
  int burn_in_epochs = 10;
  double burn_in_rate_divisor = 10.0;
  std::size_t negatives = 10;
  double init_std = 0.001;
  std::uint64_t seed = 42;
  std::vector<int> snapshot_at = {30, 40, 60, 80};
  double eps_ball = hyperbolic::kDefaultBallEps;
  WeightScaling weight_scaling = WeightScaling::kMean;
  /// Train each edge from both endpoints.
  bool symmetric = true;
  /// > 1 enables lock-free parallel updates; results are then only
  /// statistically reproducible.
  std::size_t threads = 1;

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Indexed graph used by the trainer.
class TrainingGraph {
 public:
  struct Edge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    double weight = 0.0;
  };

  /// Nodes are numbered in first-occurrence order over `edges`, followed by
  /// any `extra_nodes` not already present.
  static TrainingGraph build(std::span<const graph::RelationEdge> edges,
                             std::span<const std::string> extra_nodes = {});

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const std::uint32_t> neighbors(std::uint32_t node) const {
    return neighbors_[node];
  }
  bool adjacent(std::uint32_t a, std::uint32_t b) const;
  std::size_t non_neighbor_count(std::uint32_t node) const {
    return nodes_.size() - 1 - neighbors_[node].size();
  }
  /// Throws NotFoundError.
  std::uint32_t index_of(const std::string& id) const;
  /// Undirected degree with edge multiplicity.
  std::size_t degree(std::uint32_t node) const { return degree_[node]; }

 private:
  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> neighbors_;  // sorted, unique
  std::vector<std::size_t> degree_;
};

/// k nodes drawn uniformly with replacement from the non-neighbors of
/// `anchor` (anchor excluded). Rejection sampling is tried first; a node
/// whose non-neighbors are too rare for rejection to succeed within the
/// attempt bound is sampled by enumeration. Throws TrainingError when the
/// anchor has no non-neighbors and k > 0.
std::vector<std::uint32_t> sample_negatives(std::uint32_t anchor,
                                            std::size_t k,
                                            const TrainingGraph& graph,
                                            Rng& rng);

struct EdgeLoss {
  double loss = 0.0;
  std::vector<double> grad_u;
  std::vector<double> grad_v;
  std::vector<std::vector<double>> grad_negatives;
};

/// Loss and Euclidean gradients for one positive pair. Throws
/// DegeneratePairError when u coincides with v or with a negative.
EdgeLoss edge_loss(std::span<const double> u, std::span<const double> v,
                   std::span<const std::span<const double>> negatives,
                   double weight);

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  double max_norm = 0.0;
  std::size_t skipped_pairs = 0;
};

struct SnapshotMatrix {
  int iteration = 0;
  double mean_loss = 0.0;
  hyperbolic::EmbeddingMatrix embedding;
};

struct TrainResult {
  hyperbolic::EmbeddingMatrix embedding;
  std::vector<EpochStats> curve;
  std::vector<SnapshotMatrix> snapshots;
  /// Mean loss over all edges with a fixed negative draw, before and after
  /// training.
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Mean edge loss of `embedding` using negatives drawn from
/// Rng::derive(seed, stream); identical arguments give identical draws.
double evaluate_loss(const hyperbolic::EmbeddingMatrix& embedding,
                     const TrainingGraph& graph, const TrainConfig& config,
                     std::uint64_t stream = 0x5eed);

/// Throws ConfigError for an empty graph or invalid config and
/// TrainingError when an update produces a non-finite coordinate or leaves
/// the ball.
TrainResult train(const TrainingGraph& graph, const TrainConfig& config);
TrainResult train(std::span<const graph::RelationEdge> edges,
                  const TrainConfig& config);

struct LinkReconstruction {
  double mean_rank = 0.0;
  double mean_average_precision = 0.0;
  std::size_t pairs = 0;
};

/// For every node u and neighbor v: rank of v = 1 + number of
/// non-neighbors w != u with d(u,w) < d(u,v). Reports the mean over all
/// (u, v) pairs and the mean average precision over nodes with neighbors.
LinkReconstruction link_reconstruction_rank(
    const hyperbolic::EmbeddingMatrix& embedding, const TrainingGraph& graph);

// ---------------------------------------------------------------------------
// Snapshots

struct SnapshotRecord {
  std::string id;
  std::vector<double> vec;
  std::size_t degree = 0;
  bool fincrime = false;
};

struct EmbeddingSnapshot {
  int iteration = 0;
  double mean_loss = 0.0;
  std::vector<SnapshotRecord> records;
};

EmbeddingSnapshot make_snapshot(int iteration, double mean_loss,
                                const hyperbolic::EmbeddingMatrix& embedding,
                                const TrainingGraph& graph,
                                const std::set<std::string>& flagged);

/// One JSON object per line: {"id","vec","degree","fincrime"}.
void write_snapshot_jsonl(const std::filesystem::path& path,
                          const EmbeddingSnapshot& snapshot);
EmbeddingSnapshot read_snapshot_jsonl(const std::filesystem::path& path,
                                      int iteration = 0);

/// "snapshots/iter_0080.jsonl".
std::string snapshot_file_name(int iteration);

}  // namespace amlwb::train

#endif  // AMLWB_EMBED_TRAIN_HPP_
