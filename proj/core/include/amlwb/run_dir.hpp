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

// Run directory layout and the pipeline stages that fill it.
//
//   manifest.json            one section per completed stage
//   tables/bank_<id>/*.csv   synth
//   ground_truth/*.txt       synth
//   edges.tsv                build
//   flagged.txt              build: fincrime-flagged entity ids
//   graph_stats.json         build
//   snapshots/iter_NNNN.jsonl
//   training_curve.json      train
//   reports/collecting.json
//   reports/layered.json     detect
//   analysis/                analyze
//   tags.jsonl               written only by the service
//
// Stages never record wall-clock time, so reruns with the same inputs and
// seeds produce identical files.

#ifndef AMLWB_RUN_DIR_HPP_
#define AMLWB_RUN_DIR_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlwb/analysis.hpp"
#include "amlwb/detectors.hpp"
#include "amlwb/embed_train.hpp"
#include "amlwb/entity_graph.hpp"
#include "amlwb/synth.hpp"

namespace amlwb::run {

inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kEdges = "edges.tsv";
inline constexpr const char* kFlagged = "flagged.txt";
inline constexpr const char* kGraphStats = "graph_stats.json";
inline constexpr const char* kTrainingCurve = "training_curve.json";
inline constexpr const char* kCollectingReport = "reports/collecting.json";
inline constexpr const char* kLayeredReport = "reports/layered.json";
inline constexpr const char* kTags = "tags.jsonl";
inline constexpr const char* kAnalysisDir = "analysis";

/// Throws NotFoundError when absent and ValidationError when unparsable or
/// not a JSON object.
nlohmann::json read_manifest(const std::filesystem::path& run);

/// Replaces one top-level section, creating the manifest if needed.
void write_manifest_section(const std::filesystem::path& run,
                            const std::string& section,
                            const nlohmann::json& value);

/// Pretty-printed, newline-terminated.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

std::set<std::string> read_id_lines(const std::filesystem::path& path);
void write_id_lines(const std::filesystem::path& path,
                    const std::set<std::string>& ids);

/// Iterations listed in the train section, ascending. Throws NotFoundError
/// when the manifest or train section is missing.
std::vector<int> list_snapshots(const std::filesystem::path& run);

// Stages. Each throws MissingInputError when an upstream artifact is absent.

nlohmann::json run_synth(const std::filesystem::path& run,
                         const synth::CorpusConfig& config);

nlohmann::json run_build(const std::filesystem::path& run,
                         const graph::BuildOptions& options = {});

/// Trains on `edges` and writes snapshots plus the training curve under
/// `out`. `flagged` marks fincrime entities in the snapshot records.
nlohmann::json train_to_directory(const std::vector<graph::RelationEdge>& edges,
                                  const std::set<std::string>& flagged,
                                  const std::filesystem::path& out,
                                  const train::TrainConfig& config);

nlohmann::json run_train(const std::filesystem::path& run,
                         const train::TrainConfig& config);

struct DetectOptions {
  detect::CollectingParams collecting;
  double passthrough_ratio = 0.2;
};

/// The layered detector traces from the accounts flagged by the collecting
/// detector. Metrics are attached when ground truth is present.
nlohmann::json run_detect(const std::filesystem::path& run,
                          const DetectOptions& options = {});

struct AnalyzeOptions {
  /// Defaults to the last snapshot.
  std::optional<int> iteration;
  analysis::KMedoidsOptions clustering;
  std::size_t min_links = 20;
  std::pair<std::size_t, std::size_t> axes{0, 1};
};

nlohmann::json run_analyze(const std::filesystem::path& run,
                           const AnalyzeOptions& options = {});

struct PipelineOptions {
  synth::CorpusConfig corpus;
  graph::BuildOptions build;
  train::TrainConfig train;
  DetectOptions detect;
  AnalyzeOptions analyze;
};

nlohmann::json run_all(const std::filesystem::path& run,
                       const PipelineOptions& options);

}  // namespace amlwb::run

#endif  // AMLWB_RUN_DIR_HPP_
