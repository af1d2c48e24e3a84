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

#include "amlwb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "amlwb/error.hpp"
#include "amlwb/rng.hpp"
#include "amlwb/table.hpp"

namespace amlwb::analysis {

using hyperbolic::BallPoint;
using hyperbolic::EmbeddingMatrix;
using hyperbolic::poincare_distance;

std::map<std::string, std::size_t> degree_map(
    std::span<const graph::RelationEdge> edges) {
  std::map<std::string, std::size_t> out;
  for (const auto& e : edges) {
    ++out[e.id1];
    ++out[e.id2];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Views

namespace {

using SnapshotIndex = std::unordered_map<std::string, std::size_t>;

SnapshotIndex index_snapshot(const EmbeddingSnapshot& snapshot) {
  SnapshotIndex index;
  index.reserve(snapshot.records.size());
  for (std::size_t i = 0; i < snapshot.records.size(); ++i) {
    index.emplace(snapshot.records[i].id, i);
  }
  return index;
}

BallPoint point_of(const EmbeddingSnapshot& snapshot, const SnapshotIndex& index,
                   const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) {
    throw NotFoundError("entity " + id + " is not in snapshot " +
                        std::to_string(snapshot.iteration));
  }
  return BallPoint(snapshot.records[it->second].vec);
}

SuspectView make_view(const EmbeddingSnapshot& snapshot,
                      const SnapshotIndex& index, const std::string& id,
                      const graph::Adjacency& adjacency) {
  SuspectView view;
  view.id = id;
  view.point = point_of(snapshot, index, id);
  auto it = adjacency.find(id);
  if (it != adjacency.end()) {
    for (const auto& other : it->second) {
      view.links.push_back(LinkEndpoint{other, point_of(snapshot, index, other)});
    }
  }
  view.link_count = view.links.size();
  return view;
}

nlohmann::json coords_json(const BallPoint& p) {
  return std::vector<double>(p.coords().begin(), p.coords().end());
}

}  // namespace

nlohmann::json SuspectView::to_json() const {
  nlohmann::json links_json = nlohmann::json::array();
  for (const auto& l : links) {
    links_json.push_back({{"id", l.id}, {"vec", coords_json(l.point)}});
  }
  return {{"id", id},
          {"vec", coords_json(point)},
          {"link_count", link_count},
          {"links", links_json}};
}

std::vector<SuspectView> suspect_views(const EmbeddingSnapshot& snapshot,
                                       const std::set<std::string>& flagged,
                                       const graph::Adjacency& adjacency) {
  auto index = index_snapshot(snapshot);
  std::vector<SuspectView> views;
  views.reserve(flagged.size());
  for (const auto& id : flagged) {
    views.push_back(make_view(snapshot, index, id, adjacency));
  }
  std::stable_sort(views.begin(), views.end(),
                   [](const SuspectView& a, const SuspectView& b) {
                     return a.link_count > b.link_count;
                   });
  return views;
}

SuspectView entity_view(const EmbeddingSnapshot& snapshot,
                        const std::string& id,
                        const graph::Adjacency& adjacency) {
  return make_view(snapshot, index_snapshot(snapshot), id, adjacency);
}

std::vector<DegreeEntry> top_connected(const graph::Adjacency& adjacency,
                                       std::size_t min_links) {
  std::vector<DegreeEntry> out;
  for (const auto& [id, links] : adjacency) {
    if (links.size() >= min_links) out.push_back(DegreeEntry{id, links.size()});
  }
  std::sort(out.begin(), out.end(), [](const DegreeEntry& a, const DegreeEntry& b) {
    if (a.degree != b.degree) return a.degree > b.degree;
    return a.id < b.id;
  });
  return out;
}

DegreeSummary degree_summary(const EmbeddingSnapshot& snapshot) {
  DegreeSummary s;
  double total = 0.0;
  double flagged_total = 0.0;
  for (const auto& r : snapshot.records) {
    ++s.nodes;
    total += static_cast<double>(r.degree);
    s.max_degree = std::max(s.max_degree, r.degree);
    if (r.fincrime) {
      ++s.flagged;
      flagged_total += static_cast<double>(r.degree);
    }
  }
  if (s.nodes) s.global_mean = total / static_cast<double>(s.nodes);
  if (s.flagged) s.flagged_mean = flagged_total / static_cast<double>(s.flagged);
  return s;
}

// ---------------------------------------------------------------------------
// k-medoids

namespace {

struct PamResult {
  std::vector<std::size_t> medoids;  // positions within the subset
  std::vector<double> history;
};

/// PAM over points[subset[i]].
PamResult pam(const EmbeddingMatrix& points, std::span<const std::size_t> subset,
              std::size_t k, std::size_t max_swaps) {
  const std::size_t m = subset.size();
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      double d = poincare_distance(points.row(subset[i]), points.row(subset[j]));
      dist[i * m + j] = d;
      dist[j * m + i] = d;
    }
  }
  auto D = [&](std::size_t i, std::size_t j) { return dist[i * m + j]; };

  PamResult out;
  std::vector<char> is_medoid(m, 0);
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());

  // BUILD
  {
    std::size_t first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += D(i, j);
      if (s < best) {
        best = s;
        first = i;
      }
    }
    out.medoids.push_back(first);
    is_medoid[first] = 1;
    for (std::size_t j = 0; j < m; ++j) nearest[j] = D(first, j);
  }
  while (out.medoids.size() < k) {
    std::size_t pick = m;
    double best_gain = -1.0;
    for (std::size_t c = 0; c < m; ++c) {
      if (is_medoid[c]) continue;
      double gain = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        gain += std::max(0.0, nearest[j] - D(c, j));
      }
      if (gain > best_gain) {
        best_gain = gain;
        pick = c;
      }
    }
    out.medoids.push_back(pick);
    is_medoid[pick] = 1;
    for (std::size_t j = 0; j < m; ++j) nearest[j] = std::min(nearest[j], D(pick, j));
  }

  // SWAP
  std::vector<std::size_t> owner(m);
  std::vector<double> second(m);
  auto refresh = [&] {
    double objective = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double d1 = std::numeric_limits<double>::infinity();
      double d2 = d1;
      std::size_t o = 0;
      for (std::size_t a = 0; a < out.medoids.size(); ++a) {
        double d = D(out.medoids[a], j);
        if (d < d1) {
          d2 = d1;
          d1 = d;
          o = a;
        } else if (d < d2) {
          d2 = d;
        }
      }
      nearest[j] = d1;
      second[j] = d2;
      owner[j] = o;
      objective += d1;
    }
    return objective;
  };
  double objective = refresh();
  out.history.push_back(objective);
  for (std::size_t iter = 0; iter < max_swaps; ++iter) {
    double best_delta = -1e-12 * std::max(1.0, objective);
    std::size_t best_slot = k;
    std::size_t best_h = m;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t h = 0; h < m; ++h) {
        if (is_medoid[h]) continue;
        double delta = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          double dh = D(h, j);
          double next = owner[j] == a ? std::min(dh, second[j])
                                      : std::min(dh, nearest[j]);
          delta += next - nearest[j];
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_slot = a;
          best_h = h;
        }
      }
    }
    if (best_slot == k) break;
    is_medoid[out.medoids[best_slot]] = 0;
    out.medoids[best_slot] = best_h;
    is_medoid[best_h] = 1;
    double next = refresh();
    if (next > objective) break;
    objective = next;
    out.history.push_back(objective);
  }
  return out;
}

double assign(const EmbeddingMatrix& points, std::span<const std::size_t> medoids,
              std::vector<std::size_t>& labels) {
  labels.assign(points.rows(), 0);
  double objective = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < medoids.size(); ++a) {
      double d = poincare_distance(points.row(i), points.row(medoids[a]));
      if (d < best) {
        best = d;
        labels[i] = a;
      }
    }
    objective += best;
  }
  return objective;
}

}  // namespace

KMedoidsResult k_medoids(const EmbeddingMatrix& points,
                         const KMedoidsOptions& options) {
  const std::size_t n = points.rows();
  if (options.k == 0) throw ConfigError("k must be positive");
  if (options.k > n) {
    throw ConfigError("k = " + std::to_string(options.k) + " exceeds the " +
                      std::to_string(n) + " points available");
  }
  if (options.exact_limit < options.k) {
    throw ConfigError("exact_limit must be at least k");
  }

  KMedoidsResult result;
  if (n <= options.exact_limit) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    PamResult p = pam(points, all, options.k, options.max_swaps);
    result.medoids = p.medoids;
    result.objective_history = std::move(p.history);
    result.objective = assign(points, result.medoids, result.labels);
    return result;
  }

  result.sampled = true;
  result.objective = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < std::max<std::size_t>(1, options.samples); ++s) {
    Rng rng = Rng::derive(options.seed, s);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < options.exact_limit; ++i) {
      std::size_t j = i + rng.below(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(options.exact_limit);
    std::sort(pool.begin(), pool.end());
    PamResult p = pam(points, pool, options.k, options.max_swaps);
    std::vector<std::size_t> medoids;
    for (std::size_t pos : p.medoids) medoids.push_back(pool[pos]);
    std::vector<std::size_t> labels;
    double objective = assign(points, medoids, labels);
    if (objective < result.objective) {
      result.objective = objective;
      result.medoids = std::move(medoids);
      result.labels = std::move(labels);
      result.objective_history = std::move(p.history);
    }
  }
  return result;
}

nlohmann::json GroupingSummary::to_json() const {
  nlohmann::json gs = nlohmann::json::array();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const Group& g = groups[i];
    gs.push_back({{"group", i},
                  {"count", g.count},
                  {"mean_degree", g.mean_degree},
                  {"fincrime_fraction", g.fincrime_fraction},
                  {"medoid_id", g.medoid_id},
                  {"medoid", g.medoid}});
  }
  return {{"groups", gs},
          {"mean_distance", mean_distance},
          {"objective_history", objective_history},
          {"objective", objective},
          {"sampled", sampled}};
}

GroupingSummary cluster_groupings(const EmbeddingSnapshot& snapshot,
                                  const KMedoidsOptions& options) {
  const auto& recs = snapshot.records;
  if (recs.empty()) throw ConfigError("cannot cluster an empty snapshot");
  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return recs[a].id < recs[b].id;
  });
  const std::size_t dim = recs[order[0]].vec.size();
  EmbeddingMatrix points(recs.size(), dim);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& v = recs[order[i]].vec;
    if (v.size() != dim) throw ValidationError("snapshot vectors differ in dimension");
    std::copy(v.begin(), v.end(), points.row(i).begin());
  }

  KMedoidsResult km = k_medoids(points, options);

  // Number groups by medoid id; positions are id-sorted already.
  std::vector<std::size_t> rank(km.medoids.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return km.medoids[a] < km.medoids[b];
  });
  std::vector<std::size_t> group_of_slot(km.medoids.size());
  for (std::size_t g = 0; g < rank.size(); ++g) group_of_slot[rank[g]] = g;

  const std::size_t k = km.medoids.size();
  GroupingSummary out;
  out.groups.resize(k);
  out.objective_history = km.objective_history;
  out.objective = km.objective;
  out.sampled = km.sampled;
  std::vector<std::size_t> label(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    label[i] = group_of_slot[km.labels[i]];
    const auto& r = recs[order[i]];
    Group& g = out.groups[label[i]];
    ++g.count;
    g.mean_degree += static_cast<double>(r.degree);
    g.fincrime_fraction += r.fincrime ? 1.0 : 0.0;
    out.assignment.emplace(r.id, label[i]);
  }
  for (std::size_t slot = 0; slot < k; ++slot) {
    Group& g = out.groups[group_of_slot[slot]];
    const auto& r = recs[order[km.medoids[slot]]];
    g.medoid_id = r.id;
    g.medoid = r.vec;
    if (g.count) {
      g.mean_degree /= static_cast<double>(g.count);
      g.fincrime_fraction /= static_cast<double>(g.count);
    }
  }

  std::vector<std::size_t> members(points.rows());
  std::iota(members.begin(), members.end(), 0);
  if (members.size() > options.exact_limit) {
    Rng rng = Rng::derive(options.seed, 0xd157);
    for (std::size_t i = 0; i < options.exact_limit; ++i) {
      std::swap(members[i], members[i + rng.below(members.size() - i)]);
    }
    members.resize(options.exact_limit);
    std::sort(members.begin(), members.end());
  }
  std::vector<std::vector<double>> sum(k, std::vector<double>(k, 0.0));
  std::vector<std::vector<double>> count(k, std::vector<double>(k, 0.0));
  for (std::size_t x = 0; x < members.size(); ++x) {
    for (std::size_t y = x + 1; y < members.size(); ++y) {
      std::size_t i = members[x];
      std::size_t j = members[y];
      double d = poincare_distance(points.row(i), points.row(j));
      std::size_t a = label[i];
      std::size_t b = label[j];
      sum[a][b] += d;
      count[a][b] += 1.0;
      if (a != b) {
        sum[b][a] += d;
        count[b][a] += 1.0;
      }
    }
  }
  out.mean_distance.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (count[a][b] > 0) out.mean_distance[a][b] = sum[a][b] / count[a][b];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projection

nlohmann::json Projection::metadata() const {
  return {{"axes", {axes.first, axes.second}},
          {"points", points.size()},
          {"unit_circle", {{"center", {0.0, 0.0}}, {"radius", circle_radius}}}};
}

Projection project_plane(const EmbeddingSnapshot& snapshot,
                         std::pair<std::size_t, std::size_t> axes) {
  Projection out;
  out.axes = axes;
  if (axes.first == axes.second) throw ConfigError("projection axes must differ");
  for (const auto& r : snapshot.records) {
    if (r.vec.size() < 2) throw ConfigError("projection needs dim >= 2");
    if (axes.first >= r.vec.size() || axes.second >= r.vec.size()) {
      throw ConfigError("projection axis out of range for dim " +
                        std::to_string(r.vec.size()));
    }
    out.points.push_back(ProjectedPoint{r.id, r.vec[axes.first],
                                        r.vec[axes.second], r.degree,
                                        r.fincrime});
  }
  return out;
}

void write_projection_csv(std::ostream& out, const Projection& projection,
                          const std::map<std::string, std::size_t>& groups) {
  Table t;
  t.name = "PROJECTION";
  t.columns = {"id", "x", "y", "degree", "fincrime", "group"};
  char buf[64];
  for (const auto& p : projection.points) {
    Row row;
    row.emplace_back(p.id);
    std::snprintf(buf, sizeof buf, "%.17g", p.x);
    row.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "%.17g", p.y);
    row.emplace_back(buf);
    row.emplace_back(std::to_string(p.degree));
    row.emplace_back(p.fincrime ? "true" : "false");
    auto g = groups.find(p.id);
    if (g != groups.end()) {
      row.emplace_back(std::to_string(g->second));
    } else {
      row.emplace_back(std::nullopt);
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(out, t);
}

Rgb degree_color(std::size_t degree) {
  static constexpr Rgb kYellow{240, 228, 66};
  static constexpr Rgb kGreen{76, 175, 80};
  static constexpr Rgb kBlue{8, 48, 107};
  double t = std::clamp((static_cast<double>(degree) - 2.0) / 8.0, 0.0, 1.0);
  auto mix = [](const Rgb& a, const Rgb& b, double f) {
    auto lerp = [f](int x, int y) {
      return static_cast<int>(std::lround(x + (y - x) * f));
    };
    return Rgb{lerp(a.r, b.r), lerp(a.g, b.g), lerp(a.b, b.b)};
  };
  return t < 0.5 ? mix(kYellow, kGreen, t * 2.0) : mix(kGreen, kBlue, t * 2.0 - 1.0);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

}  // namespace

void write_svg(std::ostream& out, const Projection& projection,
               std::span<const SuspectView> views, const SvgOptions& options) {
  const double size = options.size;
  const double center = size / 2.0;
  const double scale = size / 2.0 - 20.0;
  auto sx = [&](double x) { return fmt(center + x * scale); };
  auto sy = [&](double y) { return fmt(center - y * scale); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.size
      << "\" height=\"" << options.size << "\" viewBox=\"0 0 " << options.size
      << ' ' << options.size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out << "<circle cx=\"" << fmt(center) << "\" cy=\"" << fmt(center) << "\" r=\""
      << fmt(scale * projection.circle_radius)
      << "\" fill=\"#e8e8e8\" stroke=\"#9e9e9e\" stroke-width=\"1\"/>\n";
  if (!options.title.empty()) {
    out << "<text x=\"10\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">"
        << options.title << "</text>\n";
  }

  if (options.style == SvgStyle::kDegree) {
    std::vector<const ProjectedPoint*> pts;
    for (const auto& p : projection.points) pts.push_back(&p);
    std::stable_sort(pts.begin(), pts.end(), [](auto* a, auto* b) {
      return a->degree < b->degree;
    });
    out << "<g id=\"points\">\n";
    for (const auto* p : pts) {
      out << "<circle cx=\"" << sx(p->x) << "\" cy=\"" << sy(p->y)
          << "\" r=\"1.6\" fill=\"" << hex(degree_color(p->degree)) << "\"/>\n";
    }
    out << "</g>\n";
    out << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t d = 2; d <= 10; ++d) {
      double y = 30.0 + static_cast<double>(d - 2) * 14.0;
      out << "<rect x=\"" << fmt(size - 70) << "\" y=\"" << fmt(y)
          << "\" width=\"12\" height=\"12\" fill=\"" << hex(degree_color(d))
          << "\"/><text x=\"" << fmt(size - 52) << "\" y=\"" << fmt(y + 10)
          << "\">" << (d == 10 ? ">=10" : std::to_string(d)) << "</text>\n";
    }
    out << "</g>\n";
  } else {
    const char* color =
        options.style == SvgStyle::kSuspectLinks ? "#ff00ff" : "#e00000";
    out << "<g id=\"points\" fill=\"#9e9e9e\">\n";
    for (const auto& p : projection.points) {
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y)
          << "\" r=\"1.2\"/>\n";
    }
    out << "</g>\n";
    const auto [ax, ay] = projection.axes;
    std::size_t total_links = 0;
    out << "<g id=\"links\" stroke=\"" << color
        << "\" stroke-width=\"0.7\" stroke-opacity=\"0.8\">\n";
    for (const auto& v : views) {
      for (const auto& l : v.links) {
        out << "<line x1=\"" << sx(v.point[ax]) << "\" y1=\"" << sy(v.point[ay])
            << "\" x2=\"" << sx(l.point[ax]) << "\" y2=\"" << sy(l.point[ay])
            << "\"/>\n";
      }
      total_links += v.link_count;
    }
    out << "</g>\n";
    out << "<g id=\"anchors\" fill=\"" << color << "\">\n";
    for (const auto& v : views) {
      out << "<circle cx=\"" << sx(v.point[ax]) << "\" cy=\"" << sy(v.point[ay])
          << "\" r=\"2.8\"/>\n";
    }
    out << "</g>\n";
    out << "<text x=\"10\" y=\"" << fmt(size - 12)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << (options.style == SvgStyle::kSuspectLinks ? "Suspicious: "
                                                     : "Connected: ")
        << views.size() << "  Links: " << total_links << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace amlwb::analysis
