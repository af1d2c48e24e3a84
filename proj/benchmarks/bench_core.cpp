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

#include <set>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "amlwb/analysis.hpp"
#include "amlwb/detectors.hpp"
#include "amlwb/embed_train.hpp"
#include "amlwb/hyperbolic.hpp"
#include "amlwb/rng.hpp"
#include "amlwb/synth.hpp"

namespace amlwb {
namespace {

const synth::BankCorpus& corpus() {
  static const synth::BankCorpus c =
      synth::generate_corpus(synth::CorpusConfig::scaled(0.01, 7)).first;
  return c;
}

// Scale-free relation graph with `n` nodes built by preferential attachment.
std::vector<graph::RelationEdge> attachment_graph(std::size_t n) {
  Rng rng(11);
  std::vector<graph::RelationEdge> edges;
  std::vector<std::size_t> ends{0};
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t j = ends[rng.below(ends.size())];
    edges.push_back({"n" + std::to_string(i), "n" + std::to_string(j),
                     static_cast<int>(1 + rng.below(24))});
    ends.push_back(i);
    ends.push_back(j);
  }
  return edges;
}

void BM_PoincareDistance(benchmark::State& state) {
  auto m = hyperbolic::random_init(1024, 3, 0.3, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        hyperbolic::poincare_distance(m.row(i & 1023), m.row((i + 1) & 1023)));
    ++i;
  }
}
BENCHMARK(BM_PoincareDistance);

void BM_DistanceWithGradient(benchmark::State& state) {
  auto m = hyperbolic::random_init(1024, 3, 0.3, 2);
  double d = 0, gu[3], gv[3];
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hyperbolic::distance_with_gradient(
        m.row(i & 1023), m.row((i + 1) & 1023), d, gu, gv));
    ++i;
  }
}
BENCHMARK(BM_DistanceWithGradient);

void BM_EdgeLoss(benchmark::State& state) {
  auto m = hyperbolic::random_init(12, 3, 0.3, 3);
  std::vector<std::span<const double>> negatives;
  for (std::size_t i = 2; i < 12; ++i) negatives.push_back(m.row(i));
  for (auto _ : state) {
    benchmark::DoNotOptimize(train::edge_loss(m.row(0), m.row(1), negatives, 1.0));
  }
}
BENCHMARK(BM_EdgeLoss);

void BM_TrainEpoch(benchmark::State& state) {
  auto graph = train::TrainingGraph::build(attachment_graph(state.range(0)));
  train::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.burn_in_epochs = 0;
  cfg.snapshot_at = {};
  for (auto _ : state) benchmark::DoNotOptimize(train::train(graph, cfg));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(graph.edges().size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_DetectCollecting(benchmark::State& state) {
  const auto& c = corpus();
  auto risk = risk_flags_from_table(c.risk_table());
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect::detect_collecting(c.accounts, risk, c.transactions));
  }
}
BENCHMARK(BM_DetectCollecting)->Unit(benchmark::kMillisecond);

void BM_WeeklyBinsAndLayered(benchmark::State& state) {
  const auto& c = corpus();
  auto risk = risk_flags_from_table(c.risk_table());
  auto flagged = detect::detect_collecting(c.accounts, risk, c.transactions).flagged;
  std::set<std::string> criminal(flagged.begin(), flagged.end());
  for (auto _ : state) {
    auto bins = detect::weekly_bins(c.transactions, c.accounts, c.config.start);
    benchmark::DoNotOptimize(detect::detect_layered(bins, c.transactions, criminal));
  }
}
BENCHMARK(BM_WeeklyBinsAndLayered)->Unit(benchmark::kMillisecond);

void BM_KMedoids(benchmark::State& state) {
  auto points = hyperbolic::random_init(state.range(0), 3, 0.3, 4);
  analysis::KMedoidsOptions opts;
  opts.k = 3;
  for (auto _ : state) benchmark::DoNotOptimize(analysis::k_medoids(points, opts));
}
BENCHMARK(BM_KMedoids)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace amlwb

BENCHMARK_MAIN();
