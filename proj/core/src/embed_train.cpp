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

#include "amlwb/embed_train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "amlwb/error.hpp"

namespace amlwb::train {

using hyperbolic::EmbeddingMatrix;

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (dim == 0) throw ConfigError("dim must be positive");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (negatives < 1) throw ConfigError("negatives per positive must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (burn_in_epochs < 0) throw ConfigError("burn-in epochs must be >= 0");
  if (!(burn_in_rate_divisor > 0.0)) {
    throw ConfigError("burn-in rate divisor must be positive");
  }
  if (!(init_std > 0.0)) throw ConfigError("init std must be positive");
  if (!(eps_ball > 0.0 && eps_ball < 1.0)) {
    throw ConfigError("eps_ball must lie in (0, 1)");
  }
  if (threads == 0) throw ConfigError("threads must be >= 1");
  for (int s : snapshot_at) {
    if (s < 1 || s > epochs) {
      throw ConfigError("snapshot iteration " + std::to_string(s) +
                        " outside [1, " + std::to_string(epochs) + "]");
    }
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"dim", c.dim},
       {"epochs", c.epochs},
       {"learning_rate", c.learning_rate},
       {"burn_in_epochs", c.burn_in_epochs},
       {"burn_in_rate_divisor", c.burn_in_rate_divisor},
       {"negatives", c.negatives},
       {"init_std", c.init_std},
       {"seed", c.seed},
       {"snapshot_at", c.snapshot_at},
       {"eps_ball", c.eps_ball},
       {"weight_scaling",
        c.weight_scaling == WeightScaling::kMean ? "mean" : "none"},
       {"symmetric", c.symmetric},
       {"threads", c.threads},
       {"rng", std::string(Rng::kAlgorithm)}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.dim = j.value("dim", c.dim);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.burn_in_epochs = j.value("burn_in_epochs", c.burn_in_epochs);
  c.burn_in_rate_divisor = j.value("burn_in_rate_divisor", c.burn_in_rate_divisor);
  c.negatives = j.value("negatives", c.negatives);
  c.init_std = j.value("init_std", c.init_std);
  c.seed = j.value("seed", c.seed);
  c.snapshot_at = j.value("snapshot_at", c.snapshot_at);
  c.eps_ball = j.value("eps_ball", c.eps_ball);
  std::string scaling = j.value("weight_scaling", std::string("mean"));
  if (scaling == "mean") {
    c.weight_scaling = WeightScaling::kMean;
  } else if (scaling == "none") {
    c.weight_scaling = WeightScaling::kNone;
  } else {
    throw ConfigError("unknown weight_scaling '" + scaling + "'");
  }
  c.symmetric = j.value("symmetric", c.symmetric);
  c.threads = j.value("threads", c.threads);
}

// ---------------------------------------------------------------------------
// Graph

TrainingGraph TrainingGraph::build(std::span<const graph::RelationEdge> edges,
                                   std::span<const std::string> extra_nodes) {
  TrainingGraph g;
  auto intern = [&g](const std::string& id) {
    auto [it, inserted] =
        g.index_.try_emplace(id, static_cast<std::uint32_t>(g.nodes_.size()));
    if (inserted) g.nodes_.push_back(id);
    return it->second;
  };
  for (const auto& e : edges) {
    std::uint32_t u = intern(e.id1);
    std::uint32_t v = intern(e.id2);
    if (u == v) throw ConfigError("self loop on " + e.id1);
    g.edges_.push_back(Edge{u, v, static_cast<double>(e.weight)});
  }
  for (const auto& id : extra_nodes) intern(id);

  g.neighbors_.resize(g.nodes_.size());
  g.degree_.assign(g.nodes_.size(), 0);
  for (const Edge& e : g.edges_) {
    g.neighbors_[e.u].push_back(e.v);
    g.neighbors_[e.v].push_back(e.u);
    ++g.degree_[e.u];
    ++g.degree_[e.v];
  }
  for (auto& n : g.neighbors_) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return g;
}

bool TrainingGraph::adjacent(std::uint32_t a, std::uint32_t b) const {
  const auto& n = neighbors_[a];
  return std::binary_search(n.begin(), n.end(), b);
}

std::uint32_t TrainingGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("unknown node " + id);
  return it->second;
}

std::vector<std::uint32_t> sample_negatives(std::uint32_t anchor,
                                            std::size_t k,
                                            const TrainingGraph& graph,
                                            Rng& rng) {
  std::vector<std::uint32_t> out;
  if (k == 0) return out;
  if (graph.non_neighbor_count(anchor) == 0) {
    throw TrainingError("node " + graph.nodes()[anchor] +
                        " has no non-neighbors to sample");
  }
  out.reserve(k);
  const std::size_t n = graph.node_count();
  const std::size_t bound = 10 * k + 100;
  for (std::size_t attempt = 0; out.size() < k && attempt < bound; ++attempt) {
    auto x = static_cast<std::uint32_t>(rng.below(n));
    if (x == anchor || graph.adjacent(anchor, x)) continue;
    out.push_back(x);
  }
  if (out.size() < k) {
    std::vector<std::uint32_t> pool;
    pool.reserve(graph.non_neighbor_count(anchor));
    for (std::uint32_t x = 0; x < n; ++x) {
      if (x != anchor && !graph.adjacent(anchor, x)) pool.push_back(x);
    }
    while (out.size() < k) out.push_back(pool[rng.below(pool.size())]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss

namespace {

/// Scratch space for one positive pair with up to k negatives.
struct Workspace {
  explicit Workspace(std::size_t dim, std::size_t k)
      : dim(dim),
        points((k + 2) * dim),
        grads((k + 2) * dim),
        du((k + 1) * dim),
        dist(k + 1),
        valid(k + 1) {}

  std::size_t dim;
  std::vector<double> points;  // u, v, negatives
  std::vector<double> grads;   // same layout
  std::vector<double> du;      // d d(u, x) / d u for x = v, negatives
  std::vector<double> dist;
  std::vector<char> valid;

  std::span<double> point(std::size_t slot) {
    return {points.data() + slot * dim, dim};
  }
  std::span<double> grad(std::size_t slot) {
    return {grads.data() + slot * dim, dim};
  }
};

/// Fills ws.grads for slots [0, 2 + k) and returns false when u == v.
/// Negatives coinciding with u are marked invalid and get zero gradient.
bool compute_edge_loss(Workspace& ws, std::size_t k, double weight,
                       double& loss) {
  const std::size_t dim = ws.dim;
  std::fill(ws.grads.begin(), ws.grads.begin() + (k + 2) * dim, 0.0);
  auto u = ws.point(0);
  std::span<double> du_pos{ws.du.data(), dim};
  if (!hyperbolic::distance_with_gradient(u, ws.point(1), ws.dist[0], du_pos,
                                          ws.grad(1))) {
    return false;
  }
  std::size_t live = 0;
  for (std::size_t j = 0; j < k; ++j) {
    std::span<double> du_neg{ws.du.data() + (j + 1) * dim, dim};
    ws.valid[j + 1] = hyperbolic::distance_with_gradient(
        u, ws.point(j + 2), ws.dist[j + 1], du_neg, ws.grad(j + 2));
    live += ws.valid[j + 1];
  }

  auto gu = ws.grad(0);
  if (live == 0) {
    loss = weight * ws.dist[0];
    for (std::size_t i = 0; i < dim; ++i) {
      gu[i] = weight * du_pos[i];
      ws.grad(1)[i] *= weight;
    }
    for (std::size_t j = 0; j < k; ++j) {
      std::fill(ws.grad(j + 2).begin(), ws.grad(j + 2).end(), 0.0);
    }
    return true;
  }

  double shift = ws.dist[0];
  for (std::size_t j = 1; j <= k; ++j) {
    if (ws.valid[j]) shift = std::min(shift, ws.dist[j]);
  }
  double total = std::exp(-(ws.dist[0] - shift));
  for (std::size_t j = 1; j <= k; ++j) {
    if (ws.valid[j]) total += std::exp(-(ws.dist[j] - shift));
  }
  loss = weight * (ws.dist[0] - shift + std::log(total));

  double coef_pos = weight * (1.0 - std::exp(-(ws.dist[0] - shift)) / total);
  for (std::size_t i = 0; i < dim; ++i) {
    gu[i] = coef_pos * du_pos[i];
    ws.grad(1)[i] *= coef_pos;
  }
  for (std::size_t j = 1; j <= k; ++j) {
    auto gx = ws.grad(j + 1);
    if (!ws.valid[j]) {
      std::fill(gx.begin(), gx.end(), 0.0);
      continue;
    }
    double coef = -weight * std::exp(-(ws.dist[j] - shift)) / total;
    const double* duj = ws.du.data() + j * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      gu[i] += coef * duj[i];
      gx[i] *= coef;
    }
  }
  return true;
}

}  // namespace

EdgeLoss edge_loss(std::span<const double> u, std::span<const double> v,
                   std::span<const std::span<const double>> negatives,
                   double weight) {
  const std::size_t dim = u.size();
  if (v.size() != dim) throw std::invalid_argument("edge_loss: dimension mismatch");
  for (auto p : {u, v}) {
    if (hyperbolic::squared_norm(p) >= 1.0) {
      throw OutsideBallError("edge_loss: point outside the ball");
    }
  }
  Workspace ws(dim, negatives.size());
  std::copy(u.begin(), u.end(), ws.point(0).begin());
  std::copy(v.begin(), v.end(), ws.point(1).begin());
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    if (negatives[j].size() != dim) {
      throw std::invalid_argument("edge_loss: dimension mismatch");
    }
    if (hyperbolic::squared_norm(negatives[j]) >= 1.0) {
      throw OutsideBallError("edge_loss: negative outside the ball");
    }
    std::copy(negatives[j].begin(), negatives[j].end(),
              ws.point(j + 2).begin());
  }
  EdgeLoss out;
  if (!compute_edge_loss(ws, negatives.size(), weight, out.loss)) {
    throw DegeneratePairError("edge_loss: u coincides with v");
  }
  for (std::size_t j = 1; j <= negatives.size(); ++j) {
    if (!ws.valid[j]) {
      throw DegeneratePairError("edge_loss: u coincides with negative " +
                                std::to_string(j - 1));
    }
  }
  out.grad_u.assign(ws.grad(0).begin(), ws.grad(0).end());
  out.grad_v.assign(ws.grad(1).begin(), ws.grad(1).end());
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    out.grad_negatives.emplace_back(ws.grad(j + 2).begin(),
                                    ws.grad(j + 2).end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Sample {
  std::uint32_t anchor;
  std::uint32_t positive;
  double weight;
};

std::vector<Sample> make_samples(const TrainingGraph& g,
                                 const TrainConfig& config) {
  double mean = 0.0;
  for (const auto& e : g.edges()) mean += e.weight;
  if (!g.edges().empty()) mean /= static_cast<double>(g.edges().size());
  double scale = 1.0;
  if (config.weight_scaling == WeightScaling::kMean && mean > 0.0) {
    scale = 1.0 / mean;
  }
  std::vector<Sample> out;
  out.reserve(g.edges().size() * (config.symmetric ? 2 : 1));
  for (const auto& e : g.edges()) {
    out.push_back(Sample{e.u, e.v, e.weight * scale});
    if (config.symmetric) out.push_back(Sample{e.v, e.u, e.weight * scale});
  }
  return out;
}

double load(const double& x, bool concurrent) {
  if (!concurrent) return x;
  return std::atomic_ref<const double>(x).load(std::memory_order_relaxed);
}

void store(double& x, double value, bool concurrent) {
  if (!concurrent) {
    x = value;
  } else {
    std::atomic_ref<double>(x).store(value, std::memory_order_relaxed);
  }
}

class Stepper {
 public:
  Stepper(EmbeddingMatrix& m, const TrainingGraph& g, const TrainConfig& c,
          bool concurrent)
      : m_(m), g_(g), c_(c), concurrent_(concurrent), ws_(c.dim, c.negatives),
        slots_(c.negatives + 2) {}

  /// Returns the pre-update loss of the sample; false-y skip counted.
  double step(const Sample& s, double lr, Rng& rng, std::size_t& skipped,
              int epoch) {
    std::size_t k = 0;
    if (g_.non_neighbor_count(s.anchor) > 0) {
      auto negs = sample_negatives(s.anchor, c_.negatives, g_, rng);
      k = negs.size();
      std::copy(negs.begin(), negs.end(), slots_.begin() + 2);
    }
    slots_[0] = s.anchor;
    slots_[1] = s.positive;
    for (std::size_t p = 0; p < k + 2; ++p) {
      auto src = m_.row(slots_[p]);
      auto dst = ws_.point(p);
      for (std::size_t i = 0; i < c_.dim; ++i) dst[i] = load(src[i], concurrent_);
    }
    double loss = 0.0;
    if (!compute_edge_loss(ws_, k, s.weight, loss)) {
      ++skipped;
      return 0.0;
    }
    for (std::size_t p = 0; p < k + 2; ++p) apply(slots_[p], ws_.grad(p), lr, epoch);
    return loss;
  }

 private:
  void apply(std::uint32_t node, std::span<const double> grad, double lr,
             int epoch) {
    auto row = m_.row(node);
    double theta[16];
    std::vector<double> big;
    double* t = theta;
    if (c_.dim > 16) {
      big.resize(c_.dim);
      t = big.data();
    }
    std::span<double> cur{t, c_.dim};
    for (std::size_t i = 0; i < c_.dim; ++i) cur[i] = load(row[i], concurrent_);
    double factor = hyperbolic::riemannian_factor(cur);
    for (std::size_t i = 0; i < c_.dim; ++i) cur[i] -= lr * factor * grad[i];
    hyperbolic::project_into_ball_inplace(cur, c_.eps_ball);
    for (std::size_t i = 0; i < c_.dim; ++i) {
      if (!std::isfinite(cur[i])) {
        throw TrainingError("non-finite coordinate at epoch " +
                            std::to_string(epoch) + " for entity " +
                            g_.nodes()[node]);
      }
      store(row[i], cur[i], concurrent_);
    }
  }

  EmbeddingMatrix& m_;
  const TrainingGraph& g_;
  const TrainConfig& c_;
  bool concurrent_;
  Workspace ws_;
  std::vector<std::uint32_t> slots_;
};

}  // namespace

double evaluate_loss(const EmbeddingMatrix& embedding,
                     const TrainingGraph& graph, const TrainConfig& config,
                     std::uint64_t stream) {
  auto samples = make_samples(graph, config);
  if (samples.empty()) return 0.0;
  Rng rng = Rng::derive(config.seed, stream);
  Workspace ws(config.dim, config.negatives);
  double total = 0.0;
  std::size_t counted = 0;
  for (const Sample& s : samples) {
    std::vector<std::uint32_t> negs;
    if (graph.non_neighbor_count(s.anchor) > 0) {
      negs = sample_negatives(s.anchor, config.negatives, graph, rng);
    }
    std::uint32_t slots[2] = {s.anchor, s.positive};
    for (std::size_t p = 0; p < 2; ++p) {
      auto r = embedding.row(slots[p]);
      std::copy(r.begin(), r.end(), ws.point(p).begin());
    }
    for (std::size_t j = 0; j < negs.size(); ++j) {
      auto r = embedding.row(negs[j]);
      std::copy(r.begin(), r.end(), ws.point(j + 2).begin());
    }
    double loss = 0.0;
    if (compute_edge_loss(ws, negs.size(), s.weight, loss)) {
      total += loss;
      ++counted;
    }
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

TrainResult train(const TrainingGraph& graph, const TrainConfig& config) {
  config.validate();
  if (graph.edges().empty()) throw ConfigError("cannot train on an empty edge list");
  if (graph.node_count() > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("too many nodes");
  }

  TrainResult result;
  result.embedding = hyperbolic::random_init(graph.node_count(), config.dim,
                                             config.init_std, config.seed,
                                             config.eps_ball);
  result.initial_loss = evaluate_loss(result.embedding, graph, config);

  std::vector<Sample> samples = make_samples(graph, config);
  std::set<int> snapshot_at(config.snapshot_at.begin(), config.snapshot_at.end());
  Rng rng = Rng::derive(config.seed, 1);
  const bool concurrent = config.threads > 1;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double lr = config.learning_rate;
    if (epoch <= config.burn_in_epochs) lr /= config.burn_in_rate_divisor;
    rng.shuffle(std::span(samples));

    EpochStats stats;
    stats.epoch = epoch;
    stats.learning_rate = lr;
    double total = 0.0;
    if (!concurrent) {
      Stepper stepper(result.embedding, graph, config, false);
      for (const Sample& s : samples) {
        total += stepper.step(s, lr, rng, stats.skipped_pairs, epoch);
      }
    } else {
      const std::size_t t_count = config.threads;
      std::vector<double> partial(t_count, 0.0);
      std::vector<std::size_t> skipped(t_count, 0);
      std::exception_ptr failure;
      std::mutex failure_mu;
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < t_count; ++t) {
        workers.emplace_back([&, t] {
          try {
            Rng local = Rng::derive(config.seed,
                                    1000 + static_cast<std::uint64_t>(epoch) *
                                               t_count + t);
            Stepper stepper(result.embedding, graph, config, true);
            std::size_t begin = samples.size() * t / t_count;
            std::size_t end = samples.size() * (t + 1) / t_count;
            for (std::size_t i = begin; i < end; ++i) {
              partial[t] += stepper.step(samples[i], lr, local, skipped[t], epoch);
            }
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      if (failure) std::rethrow_exception(failure);
      for (std::size_t t = 0; t < t_count; ++t) {
        total += partial[t];
        stats.skipped_pairs += skipped[t];
      }
    }
    stats.mean_loss = total / static_cast<double>(samples.size());
    stats.max_norm = result.embedding.max_norm();
    if (stats.max_norm > 1.0 - config.eps_ball) {
      throw TrainingError("epoch " + std::to_string(epoch) +
                          ": embedding left the ball (max norm " +
                          std::to_string(stats.max_norm) + ")");
    }
    result.curve.push_back(stats);
    if (snapshot_at.count(epoch)) {
      result.snapshots.push_back(
          SnapshotMatrix{epoch, stats.mean_loss, result.embedding});
    }
  }
  result.final_loss = evaluate_loss(result.embedding, graph, config);
  return result;
}

TrainResult train(std::span<const graph::RelationEdge> edges,
                  const TrainConfig& config) {
  return train(TrainingGraph::build(edges), config);
}

// ---------------------------------------------------------------------------
// Evaluation

LinkReconstruction link_reconstruction_rank(const EmbeddingMatrix& embedding,
                                            const TrainingGraph& graph) {
  LinkReconstruction out;
  const auto n = static_cast<std::uint32_t>(graph.node_count());
  double rank_sum = 0.0;
  double ap_sum = 0.0;
  std::size_t ap_nodes = 0;
  std::vector<double> far;
  std::vector<double> near;
  for (std::uint32_t u = 0; u < n; ++u) {
    auto nb = graph.neighbors(u);
    if (nb.empty()) continue;
    far.clear();
    near.clear();
    auto pu = embedding.row(u);
    std::size_t next = 0;
    for (std::uint32_t w = 0; w < n; ++w) {
      if (w == u) continue;
      double d = hyperbolic::poincare_distance(pu, embedding.row(w));
      if (next < nb.size() && nb[next] == w) {
        near.push_back(d);
        ++next;
      } else {
        far.push_back(d);
      }
    }
    std::sort(far.begin(), far.end());
    std::sort(near.begin(), near.end());
    double ap = 0.0;
    for (std::size_t i = 0; i < near.size(); ++i) {
      auto closer = static_cast<double>(
          std::lower_bound(far.begin(), far.end(), near[i]) - far.begin());
      rank_sum += 1.0 + closer;
      ap += static_cast<double>(i + 1) / (static_cast<double>(i + 1) + closer);
    }
    out.pairs += near.size();
    ap_sum += ap / static_cast<double>(near.size());
    ++ap_nodes;
  }
  if (out.pairs) out.mean_rank = rank_sum / static_cast<double>(out.pairs);
  if (ap_nodes) out.mean_average_precision = ap_sum / static_cast<double>(ap_nodes);
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots

EmbeddingSnapshot make_snapshot(int iteration, double mean_loss,
                                const EmbeddingMatrix& embedding,
                                const TrainingGraph& graph,
                                const std::set<std::string>& flagged) {
  EmbeddingSnapshot snap;
  snap.iteration = iteration;
  snap.mean_loss = mean_loss;
  snap.records.reserve(graph.node_count());
  for (std::uint32_t i = 0; i < graph.node_count(); ++i) {
    auto r = embedding.row(i);
    const std::string& id = graph.nodes()[i];
    snap.records.push_back(SnapshotRecord{id, {r.begin(), r.end()},
                                          graph.degree(i),
                                          flagged.count(id) > 0});
  }
  return snap;
}

void write_snapshot_jsonl(const std::filesystem::path& path,
                          const EmbeddingSnapshot& snapshot) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  for (const SnapshotRecord& r : snapshot.records) {
    nlohmann::json j = {{"id", r.id},
                        {"vec", r.vec},
                        {"degree", r.degree},
                        {"fincrime", r.fincrime}};
    out << j.dump() << '\n';
  }
}

EmbeddingSnapshot read_snapshot_jsonl(const std::filesystem::path& path,
                                      int iteration) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open snapshot " + path.string());
  EmbeddingSnapshot snap;
  snap.iteration = iteration;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      snap.records.push_back(SnapshotRecord{
          j.at("id").get<std::string>(), j.at("vec").get<std::vector<double>>(),
          j.at("degree").get<std::size_t>(), j.at("fincrime").get<bool>()});
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path.string() + ":" + std::to_string(lineno) + ": " +
                           e.what());
    }
  }
  return snap;
}

std::string snapshot_file_name(int iteration) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snapshots/iter_%04d.jsonl", iteration);
  return buf;
}

}  // namespace amlwb::train
