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

#include "amlwb/run_dir.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "amlwb/date.hpp"
#include "amlwb/error.hpp"
#include "amlwb/records.hpp"

namespace amlwb::run {

namespace fs = std::filesystem;

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("missing " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("corrupt JSON in " + path.string() + ": " + e.what());
  }
}

nlohmann::json read_manifest(const fs::path& run) {
  auto j = read_json(run / kManifest);
  if (!j.is_object()) {
    throw ValidationError("manifest " + (run / kManifest).string() +
                          " is not a JSON object");
  }
  return j;
}

void write_manifest_section(const fs::path& run, const std::string& section,
                            const nlohmann::json& value) {
  nlohmann::json manifest = nlohmann::json::object();
  if (fs::exists(run / kManifest)) manifest = read_manifest(run);
  manifest[section] = value;
  write_json(run / kManifest, manifest);
}

std::set<std::string> read_id_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("missing " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

void write_id_lines(const fs::path& path, const std::set<std::string>& ids) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  for (const auto& id : ids) out << id << '\n';
}

std::vector<int> list_snapshots(const fs::path& run) {
  auto manifest = read_manifest(run);
  if (!manifest.contains("train")) {
    throw NotFoundError("run " + run.string() + " has no trained snapshots");
  }
  std::vector<int> out;
  try {
    for (const auto& s : manifest["train"].at("snapshots")) {
      out.push_back(s.at("iteration").get<int>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest train section is malformed: " +
                          std::string(e.what()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

nlohmann::json require_section(const fs::path& run, const std::string& section,
                               const std::string& stage) {
  if (!fs::exists(run / kManifest)) {
    throw MissingInputError(stage + ": no manifest in " + run.string() +
                            "; run the upstream stages first");
  }
  auto manifest = read_manifest(run);
  if (!manifest.contains(section)) {
    throw MissingInputError(stage + ": run " + run.string() + " has no " +
                            section + " output");
  }
  return manifest[section];
}

void require_file(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw MissingInputError(stage + ": missing " + path.string());
  }
}

}  // namespace

nlohmann::json run_synth(const fs::path& run, const synth::CorpusConfig& config) {
  config.validate();
  auto [corpus, truth] = synth::generate_corpus(config);
  fs::create_directories(run);
  auto files = synth::write_corpus(run, corpus, truth);
  write_manifest_section(run, "synth", files.manifest);
  return files.manifest;
}

nlohmann::json run_build(const fs::path& run, const graph::BuildOptions& options) {
  auto synth = require_section(run, "synth", "build");
  Date corpus_end = parse_date(synth.at("corpus_end").get<std::string>());
  auto result = graph::build_from_corpus(run, corpus_end, options);

  graph::write_edges_tsv(run / kEdges, result.graph.edges);
  write_id_lines(run / kFlagged, result.graph.flagged);
  auto stats = result.graph.stats_json();
  stats["plcr_rows"] = result.plcr_rows;
  stats["party_entities"] = result.party_entities;
  stats["customer_entities"] = result.customer_entities;
  write_json(run / kGraphStats, stats);

  nlohmann::json section = {
      {"normalize", options.normalize},
      {"corpus_end", format_date(corpus_end)},
      {"plcr_rows", result.plcr_rows},
      {"nodes", result.graph.nodes.size()},
      {"edges", result.graph.edges.size()},
      {"flagged_nodes", result.graph.flagged.size()},
      {"files", {kEdges, kFlagged, kGraphStats}}};
  write_manifest_section(run, "build", section);
  return section;
}

nlohmann::json train_to_directory(const std::vector<graph::RelationEdge>& edges,
                                  const std::set<std::string>& flagged,
                                  const fs::path& out,
                                  const train::TrainConfig& config) {
  config.validate();
  auto graph = train::TrainingGraph::build(edges);
  auto result = train::train(graph, config);

  fs::create_directories(out / "snapshots");
  nlohmann::json snapshots = nlohmann::json::array();
  std::vector<std::string> files;
  for (const auto& s : result.snapshots) {
    auto snap = train::make_snapshot(s.iteration, s.mean_loss, s.embedding,
                                     graph, flagged);
    std::string file = train::snapshot_file_name(s.iteration);
    train::write_snapshot_jsonl(out / file, snap);
    snapshots.push_back({{"iteration", s.iteration},
                         {"file", file},
                         {"mean_loss", s.mean_loss},
                         {"max_norm", s.embedding.max_norm()}});
    files.push_back(file);
  }

  nlohmann::json curve = nlohmann::json::array();
  for (const auto& e : result.curve) {
    curve.push_back({{"epoch", e.epoch},
                     {"learning_rate", e.learning_rate},
                     {"mean_loss", e.mean_loss},
                     {"max_norm", e.max_norm},
                     {"skipped_pairs", e.skipped_pairs}});
  }
  write_json(out / kTrainingCurve, curve);
  files.push_back(kTrainingCurve);

  return {{"config", config},
          {"nodes", graph.node_count()},
          {"edges", graph.edges().size()},
          {"initial_loss", result.initial_loss},
          {"final_loss", result.final_loss},
          {"snapshots", snapshots},
          {"files", files}};
}

nlohmann::json run_train(const fs::path& run, const train::TrainConfig& config) {
  require_section(run, "build", "train");
  require_file(run / kEdges, "train");
  auto edges = graph::read_edges_tsv(run / kEdges);
  std::set<std::string> flagged;
  if (fs::exists(run / kFlagged)) flagged = read_id_lines(run / kFlagged);
  auto section = train_to_directory(edges, flagged, run, config);
  write_manifest_section(run, "train", section);
  return section;
}

nlohmann::json run_detect(const fs::path& run, const DetectOptions& options) {
  auto synth = require_section(run, "synth", "detect");
  Date start = parse_date(synth.at("corpus_start").get<std::string>());
  auto accounts = accounts_from_table(synth::read_corpus_table(run, "ACCOUNTS"));
  auto risk = risk_flags_from_table(synth::read_corpus_table(run, "RISK"));
  auto txns =
      transactions_from_table(synth::read_corpus_table(run, "TRANSACTIONS"));

  auto collecting =
      detect::detect_collecting(accounts, risk, txns, options.collecting);
  auto weekly = detect::weekly_bins(txns, accounts, start);
  std::set<std::string> criminal(collecting.flagged.begin(),
                                 collecting.flagged.end());
  auto layered =
      detect::detect_layered(weekly, txns, criminal, options.passthrough_ratio);

  if (fs::exists(run / "ground_truth")) {
    auto truth = synth::read_ground_truth(run);
    collecting.metrics = detect::score(collecting.flagged, truth.collecting_accounts);
    layered.metrics = detect::score(layered.flagged, truth.layered_accounts);
  }
  write_json(run / kCollectingReport, collecting.to_json());
  write_json(run / kLayeredReport, layered.to_json());

  nlohmann::json section = {{"files", {kCollectingReport, kLayeredReport}},
                            {"collecting_flagged", collecting.flagged.size()},
                            {"layered_flagged", layered.flagged.size()}};
  if (collecting.metrics) {
    section["collecting_recall"] = collecting.metrics->recall;
    section["collecting_precision"] = collecting.metrics->precision;
    section["layered_recall"] = layered.metrics->recall;
    section["layered_precision"] = layered.metrics->precision;
  }
  write_manifest_section(run, "detect", section);
  return section;
}

nlohmann::json run_analyze(const fs::path& run, const AnalyzeOptions& options) {
  auto train_section = require_section(run, "train", "analyze");
  require_file(run / kEdges, "analyze");
  auto iterations = list_snapshots(run);
  if (iterations.empty()) throw MissingInputError("analyze: run has no snapshots");
  int iteration = options.iteration.value_or(iterations.back());
  if (!std::binary_search(iterations.begin(), iterations.end(), iteration)) {
    throw NotFoundError("analyze: no snapshot at iteration " +
                        std::to_string(iteration));
  }
  auto snapshot = train::read_snapshot_jsonl(
      run / train::snapshot_file_name(iteration), iteration);
  auto edges = graph::read_edges_tsv(run / kEdges);
  auto adjacency = graph::make_adjacency(edges);

  std::set<std::string> flagged;
  for (const auto& r : snapshot.records) {
    if (r.fincrime) flagged.insert(r.id);
  }
  auto views = analysis::suspect_views(snapshot, flagged, adjacency);
  auto top = analysis::top_connected(adjacency, options.min_links);
  std::vector<analysis::SuspectView> top_views;
  for (const auto& t : top) {
    top_views.push_back(analysis::entity_view(snapshot, t.id, adjacency));
  }
  auto groupings = analysis::cluster_groupings(snapshot, options.clustering);
  auto projection = analysis::project_plane(snapshot, options.axes);
  auto degrees = analysis::degree_summary(snapshot);

  const fs::path dir = run / kAnalysisDir;
  fs::create_directories(dir / "suspects");
  std::vector<std::string> files;
  auto emit = [&](const std::string& rel, auto&& writer) {
    std::ofstream out(dir / rel, std::ios::binary);
    if (!out) throw IngestionError("cannot write " + (dir / rel).string());
    writer(out);
    files.push_back(std::string(kAnalysisDir) + "/" + rel);
  };

  emit("projection.csv", [&](std::ostream& out) {
    analysis::write_projection_csv(out, projection, groupings.assignment);
  });
  emit("degree.svg", [&](std::ostream& out) {
    analysis::write_svg(out, projection, {},
                        {analysis::SvgStyle::kDegree, 800,
                         "Iteration " + std::to_string(iteration)});
  });
  emit("suspects.svg", [&](std::ostream& out) {
    analysis::write_svg(out, projection, views,
                        {analysis::SvgStyle::kSuspectLinks, 800,
                         "Suspicious entities, iteration " +
                             std::to_string(iteration)});
  });
  emit("top_connected.svg", [&](std::ostream& out) {
    analysis::write_svg(out, projection, top_views,
                        {analysis::SvgStyle::kTopConnected, 800,
                         "Entities with >= " + std::to_string(options.min_links) +
                             " links"});
  });
  constexpr std::size_t kSuspectFigures = 10;
  for (std::size_t i = 0; i < views.size() && i < kSuspectFigures; ++i) {
    std::ostringstream name;
    name << "suspects/" << (i + 1) << "_" << views[i].id << ".svg";
    emit(name.str(), [&](std::ostream& out) {
      analysis::write_svg(out, projection, std::span(&views[i], 1),
                          {analysis::SvgStyle::kSuspectLinks, 800,
                           views[i].id + "  Links: " +
                               std::to_string(views[i].link_count)});
    });
  }

  nlohmann::json suspects = nlohmann::json::array();
  for (const auto& v : views) {
    suspects.push_back({{"id", v.id}, {"link_count", v.link_count}});
  }
  nlohmann::json top_json = nlohmann::json::array();
  for (const auto& t : top) top_json.push_back({{"id", t.id}, {"degree", t.degree}});
  auto grouping_json = groupings.to_json();
  nlohmann::json summary = {
      {"iteration", iteration},
      {"degree",
       {{"nodes", degrees.nodes},
        {"flagged", degrees.flagged},
        {"global_mean", degrees.global_mean},
        {"flagged_mean", degrees.flagged_mean},
        {"max_degree", degrees.max_degree}}},
      {"suspects", suspects},
      {"top_connected", {{"min_links", options.min_links}, {"entities", top_json}}},
      {"groupings", grouping_json},
      {"projection", projection.metadata()}};
  write_json(dir / "summary.json", summary);
  files.push_back(std::string(kAnalysisDir) + "/summary.json");

  nlohmann::json section = {{"iteration", iteration},
                            {"k", options.clustering.k},
                            {"seed", options.clustering.seed},
                            {"min_links", options.min_links},
                            {"axes", {options.axes.first, options.axes.second}},
                            {"flagged_mean_degree", degrees.flagged_mean},
                            {"global_mean_degree", degrees.global_mean},
                            {"files", files}};
  write_manifest_section(run, "analyze", section);
  return section;
}

nlohmann::json run_all(const fs::path& run, const PipelineOptions& options) {
  options.corpus.validate();
  options.train.validate();
  run_synth(run, options.corpus);
  run_build(run, options.build);
  run_train(run, options.train);
  run_detect(run, options.detect);
  run_analyze(run, options.analyze);
  return read_manifest(run);
}

}  // namespace amlwb::run
