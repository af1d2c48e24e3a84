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

// Post-training analysis over embedding snapshots: degree statistics,
// suspect link views, high-connectivity lists, k-medoids groupings under
// the Poincare distance and planar projections with CSV/SVG output.

#ifndef AMLWB_ANALYSIS_HPP_
#define AMLWB_ANALYSIS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlwb/embed_train.hpp"
#include "amlwb/entity_graph.hpp"
#include "amlwb/hyperbolic.hpp"

namespace amlwb::analysis {

using train::EmbeddingSnapshot;

/// Undirected degree per node, edge multiplicity counted.
std::map<std::string, std::size_t> degree_map(
    std::span<const graph::RelationEdge> edges);

struct LinkEndpoint {
  std::string id;
  hyperbolic::BallPoint point;
};

struct SuspectView {
  std::string id;
  hyperbolic::BallPoint point;
  std::vector<LinkEndpoint> links;
  std::size_t link_count = 0;

  nlohmann::json to_json() const;
};

/// One view per flagged id, sorted by link count descending then id.
/// Throws NotFoundError when a flagged id or a link endpoint is absent from
/// the snapshot.
std::vector<SuspectView> suspect_views(const EmbeddingSnapshot& snapshot,
                                       const std::set<std::string>& flagged,
                                       const graph::Adjacency& adjacency);

/// Same, for a single entity (flagged or not).
SuspectView entity_view(const EmbeddingSnapshot& snapshot,
                        const std::string& id,
                        const graph::Adjacency& adjacency);

struct DegreeEntry {
  std::string id;
  std::size_t degree = 0;

  friend bool operator==(const DegreeEntry&, const DegreeEntry&) = default;
};

/// Nodes with degree >= min_links, by degree descending then id ascending.
std::vector<DegreeEntry> top_connected(const graph::Adjacency& adjacency,
                                       std::size_t min_links);

struct DegreeSummary {
  double global_mean = 0.0;
  double flagged_mean = 0.0;
  std::size_t nodes = 0;
  std::size_t flagged = 0;
  std::size_t max_degree = 0;
};

DegreeSummary degree_summary(const EmbeddingSnapshot& snapshot);

// ---------------------------------------------------------------------------
// Groupings

struct KMedoidsOptions {
  std::size_t k = 3;
  std::uint64_t seed = 1;
  std::size_t max_swaps = 200;
  /// Above this many points the distance matrix is not materialised; PAM
  /// runs on seeded samples of this size and every point is then assigned
  /// to its nearest medoid.
  std::size_t exact_limit = 2000;
  std::size_t samples = 3;
};

struct KMedoidsResult {
  std::vector<std::size_t> medoids;  // indices into the input
  std::vector<std::size_t> labels;   // per input point, index into medoids
  /// Sum of distances to the assigned medoid after BUILD and after every
  /// accepted swap. Non-increasing.
  std::vector<double> objective_history;
  /// Objective of the final medoids over all input points.
  double objective = 0.0;
  bool sampled = false;
};

/// PAM (greedy BUILD then best-improvement SWAP) under the Poincare
/// distance. Throws ConfigError when k is 0 or exceeds the point count.
KMedoidsResult k_medoids(const hyperbolic::EmbeddingMatrix& points,
                         const KMedoidsOptions& options);

struct Group {
  std::string medoid_id;
  std::vector<double> medoid;
  std::size_t count = 0;
  double mean_degree = 0.0;
  double fincrime_fraction = 0.0;
};

struct GroupingSummary {
  std::vector<Group> groups;
  /// Mean Poincare distance between members of groups a and b; the diagonal
  /// holds the within-group mean.
  std::vector<std::vector<double>> mean_distance;
  std::map<std::string, std::size_t> assignment;
  std::vector<double> objective_history;
  double objective = 0.0;
  bool sampled = false;

  nlohmann::json to_json() const;
};

/// Points are ordered by id before clustering, so the result does not depend
/// on the order of the snapshot records. Groups are numbered by medoid id.
GroupingSummary cluster_groupings(const EmbeddingSnapshot& snapshot,
                                  const KMedoidsOptions& options = {});

// ---------------------------------------------------------------------------
// Projection and plots

struct ProjectedPoint {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  std::size_t degree = 0;
  bool fincrime = false;
};

struct Projection {
  std::pair<std::size_t, std::size_t> axes{0, 1};
  std::vector<ProjectedPoint> points;
  /// The projected ball boundary: a circle of radius 1 at the origin.
  double circle_radius = 1.0;

  nlohmann::json metadata() const;
};

/// Keeps coordinates `axes.first` and `axes.second`. Throws ConfigError when
/// the snapshot has fewer than two dimensions or the axes are invalid.
Projection project_plane(const EmbeddingSnapshot& snapshot,
                         std::pair<std::size_t, std::size_t> axes = {0, 1});

/// id,x,y,degree,fincrime,group. `group` is empty for ids missing from the
/// assignment.
void write_projection_csv(std::ostream& out, const Projection& projection,
                          const std::map<std::string, std::size_t>& groups);

struct Rgb {
  int r = 0;
  int g = 0;
  int b = 0;
};

/// Yellow at degree <= 2 through green to dark blue at degree >= 10.
Rgb degree_color(std::size_t degree);

enum class SvgStyle {
  kDegree,         // points colored by degree
  kSuspectLinks,   // grey points, magenta links of the given views
  kTopConnected,   // grey points, red links of the given views
};

struct SvgOptions {
  SvgStyle style = SvgStyle::kDegree;
  int size = 800;
  std::string title;
};

/// Scatter of the projection inside the unit circle. `views` supplies the
/// link overlays for the link styles; their endpoints are projected on the
/// same axes.
void write_svg(std::ostream& out, const Projection& projection,
               std::span<const SuspectView> views, const SvgOptions& options);

}  // namespace amlwb::analysis

#endif  // AMLWB_ANALYSIS_HPP_
