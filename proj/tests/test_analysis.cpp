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

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "amlwb/analysis.hpp"
#include "amlwb/error.hpp"
#include "amlwb/rng.hpp"
#include "amlwb/synth.hpp"
#include "support/test_util.hpp"

namespace amlwb::analysis {
namespace {

using graph::RelationEdge;
using hyperbolic::EmbeddingMatrix;
using hyperbolic::poincare_distance;
using train::SnapshotRecord;

EmbeddingSnapshot snapshot_of(std::vector<SnapshotRecord> records) {
  EmbeddingSnapshot s;
  s.iteration = 80;
  s.records = std::move(records);
  return s;
}

std::vector<RelationEdge> triangle() {
  return {{"a", "b", 1}, {"b", "c", 1}, {"a", "c", 1}};
}

TEST(DegreeMap, TriangleAndEmpty) {
  auto d = degree_map(triangle());
  EXPECT_EQ(d, (std::map<std::string, std::size_t>{{"a", 2}, {"b", 2}, {"c", 2}}));
  EXPECT_TRUE(degree_map({}).empty());
}

// Star of 14 around "s" with every leaf placed on a circle.
struct StarFixture {
  std::vector<RelationEdge> edges;
  EmbeddingSnapshot snapshot;
  graph::Adjacency adjacency;

  StarFixture() {
    std::vector<SnapshotRecord> recs{{"s", {0.0, 0.0, 0.0}, 14, true}};
    for (int i = 0; i < 14; ++i) {
      std::string id = "l" + std::to_string(i);
      edges.push_back({"s", id, 3});
      double t = 2 * M_PI * i / 14;
      recs.push_back({id, {0.5 * std::cos(t), 0.5 * std::sin(t), 0.1}, 1, false});
    }
    edges.push_back({"l0", "l1", 1});
    recs[1].degree = recs[2].degree = 2;
    recs[1].fincrime = true;
    snapshot = snapshot_of(std::move(recs));
    adjacency = graph::make_adjacency(edges);
  }
};

TEST(SuspectViews, DegreeFourteen) {
  StarFixture f;
  auto views = suspect_views(f.snapshot, {"s", "l0"}, f.adjacency);
  ASSERT_EQ(views.size(), 2u);
  EXPECT_EQ(views[0].id, "s");
  EXPECT_EQ(views[0].link_count, 14u);
  EXPECT_EQ(views[0].links.size(), 14u);
  EXPECT_EQ(views[1].id, "l0");
  EXPECT_EQ(views[1].link_count, 2u);
  auto degrees = degree_map(f.edges);
  for (const auto& v : views) {
    EXPECT_EQ(v.link_count, degrees.at(v.id));
    for (const auto& l : v.links) {
      auto rec = std::find_if(f.snapshot.records.begin(), f.snapshot.records.end(),
                              [&](const auto& r) { return r.id == l.id; });
      ASSERT_NE(rec, f.snapshot.records.end());
      EXPECT_EQ(std::vector<double>(l.point.coords().begin(), l.point.coords().end()), rec->vec);
    }
  }
  auto j = views[0].to_json();
  EXPECT_EQ(j["link_count"], 14);
}

TEST(SuspectViews, EmptyAndMissing) {
  StarFixture f;
  EXPECT_TRUE(suspect_views(f.snapshot, {}, f.adjacency).empty());
  EXPECT_THROW(suspect_views(f.snapshot, {"ghost"}, f.adjacency), NotFoundError);
  EXPECT_EQ(entity_view(f.snapshot, "l5", f.adjacency).link_count, 1u);
  EXPECT_THROW(entity_view(f.snapshot, "ghost", f.adjacency), NotFoundError);
}

TEST(TopConnected, OrderingAndBounds) {
  StarFixture f;
  auto all = top_connected(f.adjacency, 0);
  EXPECT_EQ(all.size(), 15u);
  EXPECT_EQ(all[0], (DegreeEntry{"s", 14}));
  EXPECT_EQ(all[1], (DegreeEntry{"l0", 2}));
  EXPECT_EQ(all[2], (DegreeEntry{"l1", 2}));
  EXPECT_EQ(all[3].id, "l10");
  EXPECT_TRUE(top_connected(f.adjacency, 15).empty());
  EXPECT_EQ(top_connected(f.adjacency, 14).size(), 1u);
}

TEST(DegreeSummary, Means) {
  StarFixture f;
  auto s = degree_summary(f.snapshot);
  EXPECT_EQ(s.nodes, 15u);
  EXPECT_EQ(s.flagged, 2u);
  EXPECT_EQ(s.max_degree, 14u);
  EXPECT_DOUBLE_EQ(s.flagged_mean, 8.0);
  EXPECT_DOUBLE_EQ(s.global_mean, (14.0 + 2 + 2 + 12) / 15);
}

class CorpusGraph : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    testing::TempDir dir;
    auto config = synth::CorpusConfig::scaled(0.01, 7);
    auto [corpus, truth] = synth::generate_corpus(config);
    synth::write_corpus(dir.path(), corpus, truth);
    built_ = new graph::BuildResult(graph::build_from_corpus(dir.path(), config.end()));
  }
  static void TearDownTestSuite() { delete built_; }
  static graph::BuildResult* built_;
};

graph::BuildResult* CorpusGraph::built_ = nullptr;

TEST_F(CorpusGraph, DegreeMapMatchesBruteForce) {
  const auto& edges = built_->graph.edges;
  auto d = degree_map(edges);
  for (const auto& node : built_->graph.nodes) {
    std::size_t count = 0;
    for (const auto& e : edges) count += (e.id1 == node) + (e.id2 == node);
    ASSERT_EQ(d.at(node), count) << node;
  }
  EXPECT_EQ(d.size(), built_->graph.nodes.size());
}

TEST_F(CorpusGraph, TopConnectedMatchesBruteForceFilter) {
  auto adj = graph::make_adjacency(built_->graph.edges);
  auto d = degree_map(built_->graph.edges);
  std::vector<DegreeEntry> oracle;
  for (const auto& [id, deg] : d) {
    if (deg >= 20) oracle.push_back({id, deg});
  }
  std::stable_sort(oracle.begin(), oracle.end(),
                   [](const auto& a, const auto& b) { return a.degree > b.degree; });
  auto got = top_connected(adj, 20);
  EXPECT_FALSE(got.empty());
  EXPECT_EQ(got, oracle);
  EXPECT_LE(got.front().degree, 32u);
}

TEST_F(CorpusGraph, FlaggedEntitiesAreHighlyConnected) {
  const auto& g = built_->graph;
  double flagged = 0, all = 0;
  for (const auto& f : g.flagged) flagged += double(g.degree.at(f));
  for (const auto& [id, d] : g.degree) all += double(d);
  ASSERT_FALSE(g.flagged.empty());
  EXPECT_GT(flagged / double(g.flagged.size()), all / double(g.degree.size()));
}

EmbeddingMatrix two_blobs(std::size_t per_blob, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingMatrix m(2 * per_blob, 3);
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    double cx = i < per_blob ? 0.6 : -0.6;
    auto row = m.row(i);
    row[0] = cx + 0.05 * rng.normal();
    row[1] = 0.05 * rng.normal();
    row[2] = 0.05 * rng.normal();
  }
  return m;
}

double objective_of(const EmbeddingMatrix& m, const std::vector<std::size_t>& medoids) {
  double total = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double best = INFINITY;
    for (auto c : medoids) best = std::min(best, poincare_distance(m.row(i), m.row(c)));
    total += best;
  }
  return total;
}

TEST(KMedoids, SeparatesPlantedBlobs) {
  auto m = two_blobs(50, 3);
  KMedoidsOptions opts;
  opts.k = 2;
  auto r = k_medoids(m, opts);
  ASSERT_EQ(r.medoids.size(), 2u);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    agree += (r.labels[i] == r.labels[0]) == (i < 50);
  }
  EXPECT_GE(agree, 90u);
  EXPECT_FALSE(r.sampled);
  EXPECT_NEAR(r.objective, objective_of(m, r.medoids), 1e-9);
}

TEST(KMedoids, MatchesExhaustiveOptimumOnSmallInputs) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto m = two_blobs(6, seed);
    KMedoidsOptions opts;
    opts.k = 2;
    auto r = k_medoids(m, opts);
    double best = INFINITY;
    for (std::size_t a = 0; a < m.rows(); ++a) {
      for (std::size_t b = a + 1; b < m.rows(); ++b) best = std::min(best, objective_of(m, {a, b}));
    }
    EXPECT_NEAR(r.objective, best, 1e-9) << seed;
  }
}

TEST(KMedoids, SingleGroupAndErrors) {
  auto m = two_blobs(5, 1);
  KMedoidsOptions opts;
  opts.k = 1;
  auto r = k_medoids(m, opts);
  for (auto l : r.labels) EXPECT_EQ(l, 0u);
  opts.k = 0;
  EXPECT_THROW(k_medoids(m, opts), ConfigError);
  opts.k = 11;
  EXPECT_THROW(k_medoids(m, opts), ConfigError);
}

TEST(KMedoids, ObjectiveHistoryNonIncreasing) {
  Rng rng(5);
  EmbeddingMatrix m(300, 3);
  for (double& x : m.data()) x = 0.3 * rng.normal();
  for (std::size_t i = 0; i < m.rows(); ++i) hyperbolic::project_into_ball_inplace(m.row(i));
  KMedoidsOptions opts;
  opts.k = 6;
  auto r = k_medoids(m, opts);
  ASSERT_FALSE(r.objective_history.empty());
  for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
    EXPECT_LE(r.objective_history[i], r.objective_history[i - 1]);
  }
  EXPECT_NEAR(r.objective, r.objective_history.back(), 1e-9 * r.objective);
}

TEST(KMedoids, SampledAboveExactLimit) {
  auto m = two_blobs(60, 9);
  KMedoidsOptions opts;
  opts.k = 2;
  opts.exact_limit = 40;
  auto r = k_medoids(m, opts);
  EXPECT_TRUE(r.sampled);
  EXPECT_EQ(r.labels.size(), 120u);
  EXPECT_NEAR(r.objective, objective_of(m, r.medoids), 1e-9);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 120; ++i) agree += (r.labels[i] == r.labels[0]) == (i < 60);
  EXPECT_GE(agree, 108u);
}

EmbeddingSnapshot blob_snapshot(std::size_t per_blob) {
  auto m = two_blobs(per_blob, 4);
  std::vector<SnapshotRecord> recs;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    recs.push_back({"n" + std::to_string(1000 + i), {row.begin(), row.end()},
                    i < per_blob ? 10u : 1u, i % 10 == 0});
  }
  return snapshot_of(std::move(recs));
}

TEST(Groupings, PermutationInvariant) {
  auto s = blob_snapshot(30);
  KMedoidsOptions opts;
  opts.k = 2;
  auto a = cluster_groupings(s, opts);
  Rng rng(2);
  rng.shuffle(std::span(s.records));
  auto b = cluster_groupings(s, opts);
  ASSERT_EQ(a.groups.size(), b.groups.size());
  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    EXPECT_EQ(a.groups[g].medoid_id, b.groups[g].medoid_id);
  }
  EXPECT_EQ(a.assignment, b.assignment);
}

TEST(Groupings, SummaryStatistics) {
  auto s = blob_snapshot(30);
  KMedoidsOptions opts;
  opts.k = 2;
  auto r = cluster_groupings(s, opts);
  ASSERT_EQ(r.groups.size(), 2u);
  EXPECT_LT(r.groups[0].medoid_id, r.groups[1].medoid_id);
  EXPECT_EQ(r.groups[0].count + r.groups[1].count, 60u);
  EXPECT_DOUBLE_EQ(r.groups[0].mean_degree, 10.0);
  EXPECT_DOUBLE_EQ(r.groups[1].mean_degree, 1.0);
  EXPECT_DOUBLE_EQ(r.groups[0].fincrime_fraction, 3.0 / 30);
  ASSERT_EQ(r.mean_distance.size(), 2u);
  EXPECT_LT(r.mean_distance[0][0], r.mean_distance[0][1]);
  EXPECT_LT(r.mean_distance[1][1], r.mean_distance[1][0]);
  EXPECT_DOUBLE_EQ(r.mean_distance[0][1], r.mean_distance[1][0]);
  auto j = r.to_json();
  EXPECT_EQ(j["groups"].size(), 2u);
}

TEST(Projection, DropsCoordinates) {
  auto s = snapshot_of({{"p", {0.3, 0.4, 0.5}, 3, true}});
  auto xy = project_plane(s);
  ASSERT_EQ(xy.points.size(), 1u);
  EXPECT_DOUBLE_EQ(xy.points[0].x, 0.3);
  EXPECT_DOUBLE_EQ(xy.points[0].y, 0.4);
  auto yz = project_plane(s, {1, 2});
  EXPECT_DOUBLE_EQ(yz.points[0].x, 0.4);
  EXPECT_DOUBLE_EQ(yz.points[0].y, 0.5);
  EXPECT_EQ(xy.circle_radius, 1.0);
  EXPECT_THROW(project_plane(s, {1, 1}), ConfigError);
  EXPECT_THROW(project_plane(s, {0, 3}), ConfigError);
  EXPECT_THROW(project_plane(snapshot_of({{"p", {0.3}, 1, false}})), ConfigError);
}

TEST(Projection, NeverLengthensVectors) {
  auto s = blob_snapshot(20);
  auto p = project_plane(s, {0, 2});
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    double planar = std::hypot(p.points[i].x, p.points[i].y);
    EXPECT_LE(planar, std::sqrt(hyperbolic::squared_norm(s.records[i].vec)) + 1e-15);
  }
}

TEST(Projection, CsvRows) {
  auto s = snapshot_of({{"a", {0.25, -0.5, 0}, 3, true}, {"b", {0.1, 0.2, 0}, 1, false}});
  std::ostringstream out;
  write_projection_csv(out, project_plane(s), {{"a", 1}});
  EXPECT_EQ(out.str(),
            "id,x,y,degree,fincrime,group\n"
            "a,0.25,-0.5,3,true,1\n"
            "b,0.10000000000000001,0.20000000000000001,1,false,\n");
}

TEST(Svg, DegreeColorsEndpoints) {
  auto y = degree_color(0);
  EXPECT_EQ(std::tie(y.r, y.g, y.b), std::make_tuple(240, 228, 66));
  auto g = degree_color(6);
  EXPECT_EQ(std::tie(g.r, g.g, g.b), std::make_tuple(76, 175, 80));
  auto b = degree_color(40);
  EXPECT_EQ(std::tie(b.r, b.g, b.b), std::make_tuple(8, 48, 107));
  auto mid = degree_color(4);
  EXPECT_GT(mid.r, g.r);
  EXPECT_LT(mid.r, y.r);
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(Svg, StylesAndOverlays) {
  StarFixture f;
  auto proj = project_plane(f.snapshot);
  std::ostringstream degree;
  write_svg(degree, proj, {}, {SvgStyle::kDegree, 400, "Iteration 80"});
  EXPECT_EQ(degree.str().rfind("<svg", 0), 0u);
  EXPECT_EQ(count_of(degree.str(), "<circle"), 15u + 1u);
  EXPECT_NE(degree.str().find("Iteration 80"), std::string::npos);

  auto views = suspect_views(f.snapshot, {"s"}, f.adjacency);
  std::ostringstream suspects;
  write_svg(suspects, proj, views, {SvgStyle::kSuspectLinks, 400, ""});
  EXPECT_NE(suspects.str().find("<g id=\"links\" stroke=\"#ff00ff\""), std::string::npos);
  EXPECT_EQ(suspects.str().find("#e00000"), std::string::npos);
  EXPECT_EQ(count_of(suspects.str(), "<line"), 14u);
  EXPECT_NE(suspects.str().find("Suspicious: 1"), std::string::npos);
  EXPECT_NE(suspects.str().find("Links: 14"), std::string::npos);

  std::ostringstream top;
  write_svg(top, proj, views, {SvgStyle::kTopConnected, 400, ""});
  EXPECT_NE(top.str().find("#e00000"), std::string::npos);
  EXPECT_EQ(count_of(top.str(), "<line"), 14u);
}

}  // namespace
}  // namespace amlwb::analysis
