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

// amlwb: synth -> build -> train -> detect -> analyze -> serve.
// Exit status 0 on success, 1 on runtime failure, 2 on usage errors
// (bad flags, invalid configuration, missing upstream artifacts).

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amlwb/error.hpp"
#include "amlwb/run_dir.hpp"
#include "amlwb/service.hpp"

namespace {

namespace fs = std::filesystem;
using namespace amlwb;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct SynthFlags {
  std::string out;
  double scale = 0.01;
  std::uint64_t seed = 7;
  std::size_t planted_collecting = 20;
  std::size_t planted_layered = 30;
  bool noise = false;
};

struct TrainFlags {
  std::string run;
  std::string edges;
  std::string flagged;
  std::string out;
  train::TrainConfig config;
  std::string weight_scaling = "mean";
};

struct DetectFlags {
  std::string run;
  run::DetectOptions options;
};

struct AnalyzeFlags {
  std::string run;
  int iteration = 0;
  run::AnalyzeOptions options;
  std::vector<std::size_t> axes{0, 1};
};

synth::CorpusConfig corpus_config(const SynthFlags& f) {
  auto c = synth::CorpusConfig::scaled(f.scale, f.seed);
  c.planted_collecting = f.planted_collecting;
  c.planted_layered = f.planted_layered;
  c.noise = f.noise;
  return c;
}

void add_synth_options(CLI::App* cmd, SynthFlags& f) {
  cmd->add_option("--scale", f.scale, "Fraction of the six-bank account counts")
      ->capture_default_str()
      ->check(CLI::Range(1e-6, 1.0));
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_option("--planted-collecting", f.planted_collecting,
                  "Collecting-network accounts to plant")
      ->capture_default_str();
  cmd->add_option("--planted-layered", f.planted_layered,
                  "Layered pass-through accounts to plant")
      ->capture_default_str();
  cmd->add_flag("--noise", f.noise, "Perturb document number spelling");
}

void add_train_options(CLI::App* cmd, TrainFlags& f) {
  auto& c = f.config;
  cmd->add_option("--epochs", c.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--snapshot-at", c.snapshot_at, "Comma-separated epochs")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--lr", c.learning_rate)->capture_default_str();
  cmd->add_option("--burn-in", c.burn_in_epochs)->capture_default_str();
  cmd->add_option("--negatives", c.negatives)->capture_default_str();
  cmd->add_option("--seed", c.seed)->capture_default_str();
  cmd->add_option("--dim", c.dim)->capture_default_str();
  cmd->add_option("--threads", c.threads, "Values > 1 use lock-free updates")
      ->capture_default_str();
  cmd->add_option("--weight-scaling", f.weight_scaling)
      ->check(CLI::IsMember({"mean", "none"}))
      ->capture_default_str();
}

void apply_weight_scaling(TrainFlags& f) {
  f.config.weight_scaling = f.weight_scaling == "none"
                                ? train::WeightScaling::kNone
                                : train::WeightScaling::kMean;
}

std::pair<std::size_t, std::size_t> axes_of(const std::vector<std::size_t>& v) {
  if (v.size() != 2) throw ConfigError("--axes takes exactly two indices");
  return {v[0], v[1]};
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << std::endl; }

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AML relationship-embedding workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "amlwb 0.1.0");

  SynthFlags synth_flags;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multi-bank corpus");
  synth_cmd->add_option("--out", synth_flags.out, "Run directory")->required();
  add_synth_options(synth_cmd, synth_flags);

  std::string build_run;
  graph::BuildOptions build_opts;
  auto* build_cmd = app.add_subcommand("build", "Resolve entities and build the edge list");
  build_cmd->add_option("--run", build_run, "Run directory")->required();
  build_cmd->add_flag("--normalize", build_opts.normalize,
                      "Trim and lowercase identifiers before resolution");

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train Poincare embeddings");
  auto* train_run = train_cmd->add_option("--run", train_flags.run, "Run directory");
  auto* train_edges =
      train_cmd->add_option("--edges", train_flags.edges, "Edge TSV (id1, id2, weight)");
  auto* train_out = train_cmd->add_option("--out", train_flags.out,
                                          "Output directory for --edges mode");
  train_cmd->add_option("--flagged", train_flags.flagged,
                        "File of flagged entity ids for --edges mode");
  train_run->excludes(train_edges);
  train_edges->needs(train_out);
  train_out->needs(train_edges);
  add_train_options(train_cmd, train_flags);

  DetectFlags detect_flags;
  auto* detect_cmd = app.add_subcommand("detect", "Run the rule-based detectors");
  detect_cmd->add_option("--run", detect_flags.run, "Run directory")->required();
  detect_cmd->add_option("--window-months", detect_flags.options.collecting.window_months)
      ->capture_default_str();
  detect_cmd->add_option("--min-senders",
                         detect_flags.options.collecting.min_criminal_senders)
      ->capture_default_str();
  detect_cmd->add_option("--ratio", detect_flags.options.passthrough_ratio)
      ->capture_default_str();

  AnalyzeFlags analyze_flags;
  auto* analyze_cmd = app.add_subcommand("analyze", "Figure data, groupings and plots");
  analyze_cmd->add_option("--run", analyze_flags.run, "Run directory")->required();
  auto* analyze_iter = analyze_cmd->add_option("--iter", analyze_flags.iteration,
                                               "Snapshot iteration (default: last)");
  analyze_cmd->add_option("--k", analyze_flags.options.clustering.k, "Groupings")
      ->capture_default_str();
  analyze_cmd->add_option("--seed", analyze_flags.options.clustering.seed)
      ->capture_default_str();
  analyze_cmd->add_option("--min-links", analyze_flags.options.min_links)
      ->capture_default_str();
  analyze_cmd->add_option("--axes", analyze_flags.axes, "Projection axes, e.g. 0,1")
      ->delimiter(',')
      ->capture_default_str();

  std::string serve_root = ".";
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Serve run directories over HTTP");
  serve_cmd->add_option("--root", serve_root, "Directory containing runs")
      ->capture_default_str();
  serve_cmd->add_option("--host", serve_host)->capture_default_str();
  serve_cmd->add_option("--port", serve_port)->capture_default_str()->check(
      CLI::Range(1, 65535));

  SynthFlags pipe_synth;
  TrainFlags pipe_train;
  bool pipe_all = false;
  std::string pipe_run;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage into one directory");
  pipe_cmd->add_flag("--all", pipe_all, "synth, build, train, detect and analyze")
      ->required();
  pipe_cmd->add_option("--run,--out", pipe_run, "Run directory")->required();
  pipe_cmd->add_option("--scale", pipe_synth.scale)->capture_default_str()->check(
      CLI::Range(1e-6, 1.0));
  pipe_cmd->add_option("--seed", pipe_synth.seed, "Seed for every stage")
      ->capture_default_str();
  pipe_cmd->add_option("--planted-collecting", pipe_synth.planted_collecting)
      ->capture_default_str();
  pipe_cmd->add_option("--planted-layered", pipe_synth.planted_layered)
      ->capture_default_str();
  pipe_cmd->add_flag("--noise", pipe_synth.noise);
  pipe_cmd->add_option("--epochs", pipe_train.config.epochs)->capture_default_str();
  pipe_cmd->add_option("--snapshot-at", pipe_train.config.snapshot_at)
      ->delimiter(',')
      ->capture_default_str();
  pipe_cmd->add_option("--threads", pipe_train.config.threads)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      auto section = run::run_synth(synth_flags.out, corpus_config(synth_flags));
      print(section.at("counts"));
    } else if (build_cmd->parsed()) {
      auto section = run::run_build(build_run, build_opts);
      print(section);
    } else if (train_cmd->parsed()) {
      apply_weight_scaling(train_flags);
      nlohmann::json section;
      if (!train_flags.edges.empty()) {
        if (!fs::exists(train_flags.edges)) {
          throw MissingInputError("missing edge file " + train_flags.edges);
        }
        std::set<std::string> flagged;
        if (!train_flags.flagged.empty()) flagged = run::read_id_lines(train_flags.flagged);
        section = run::train_to_directory(graph::read_edges_tsv(train_flags.edges),
                                          flagged, train_flags.out, train_flags.config);
        run::write_json(fs::path(train_flags.out) / "training.json", section);
      } else if (!train_flags.run.empty()) {
        section = run::run_train(train_flags.run, train_flags.config);
      } else {
        throw ConfigError("train needs --run or --edges with --out");
      }
      section.erase("config");
      print(section);
    } else if (detect_cmd->parsed()) {
      print(run::run_detect(detect_flags.run, detect_flags.options));
    } else if (analyze_cmd->parsed()) {
      if (analyze_iter->count()) analyze_flags.options.iteration = analyze_flags.iteration;
      analyze_flags.options.axes = axes_of(analyze_flags.axes);
      print(run::run_analyze(analyze_flags.run, analyze_flags.options));
    } else if (serve_cmd->parsed()) {
      if (!fs::is_directory(serve_root)) {
        throw MissingInputError("serve root " + serve_root + " is not a directory");
      }
      service::Workbench workbench(serve_root);
      service::HttpServer server(workbench);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << serve_root << " on http://" << serve_host << ':'
                << serve_port << std::endl;
      if (!server.listen(serve_host, serve_port)) {
        throw Error("cannot listen on " + serve_host + ":" + std::to_string(serve_port));
      }
      g_server = nullptr;
    } else if (pipe_cmd->parsed()) {
      run::PipelineOptions opts;
      opts.corpus = corpus_config(pipe_synth);
      opts.train.seed = pipe_synth.seed;
      opts.train.epochs = pipe_train.config.epochs;
      opts.train.snapshot_at = pipe_train.config.snapshot_at;
      opts.train.threads = pipe_train.config.threads;
      opts.analyze.clustering.seed = pipe_synth.seed;
      auto manifest = run::run_all(pipe_run, opts);
      print({{"synth", manifest["synth"]["counts"]},
             {"build", manifest["build"]},
             {"train_final_loss", manifest["train"]["final_loss"]},
             {"snapshots", run::list_snapshots(pipe_run)},
             {"detect", manifest["detect"]},
             {"analyze_files", manifest["analyze"]["files"].size()}});
    }
  } catch (const MissingInputError& e) {
    std::cerr << "amlwb: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "amlwb: invalid configuration: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NotFoundError& e) {
    std::cerr << "amlwb: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "amlwb: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
