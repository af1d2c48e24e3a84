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

#include "amlwb/service.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <set>

#include <httplib.h>

#include "amlwb/analysis.hpp"
#include "amlwb/date.hpp"
#include "amlwb/entity_graph.hpp"
#include "amlwb/error.hpp"
#include "amlwb/records.hpp"
#include "amlwb/run_dir.hpp"
#include "amlwb/synth.hpp"

namespace amlwb::service {

namespace fs = std::filesystem;

std::string utc_now() {
  auto now = std::chrono::floor<std::chrono::seconds>(
      std::chrono::system_clock::now());
  return format_timestamp(Timestamp{now}) + "Z";
}

nlohmann::json AnalystTag::to_json() const {
  return {{"entity_id", entity_id},
          {"verdict", verdict},
          {"note", note},
          {"timestamp", timestamp}};
}

AnalystTag AnalystTag::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("tag must be a JSON object");
  AnalystTag t;
  auto field = [&j](const char* name, bool required) -> std::string {
    if (!j.contains(name) || j[name].is_null()) {
      if (required) throw ValidationError(std::string("missing field '") + name + "'");
      return {};
    }
    if (!j[name].is_string()) {
      throw ValidationError(std::string("field '") + name + "' must be a string");
    }
    return j[name].get<std::string>();
  };
  t.entity_id = field("entity_id", true);
  t.verdict = field("verdict", true);
  t.note = field("note", false);
  t.timestamp = field("timestamp", false);
  if (t.entity_id.empty()) throw ValidationError("entity_id must not be empty");
  if (std::find(std::begin(kVerdicts), std::end(kVerdicts), t.verdict) ==
      std::end(kVerdicts)) {
    throw ValidationError("verdict must be one of suspicious, clean, unknown; got '" +
                          t.verdict + "'");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Workbench

Workbench::Workbench(fs::path root, Clock clock)
    : root_(std::move(root)), clock_(std::move(clock)) {}

fs::path Workbench::run_path(const std::string& run) const {
  if (run.empty() || run == "." || run == ".." ||
      run.find_first_of("/\\") != std::string::npos) {
    throw NotFoundError("unknown run '" + run + "'");
  }
  fs::path p = root_ / run;
  if (!fs::is_regular_file(p / run::kManifest)) {
    throw NotFoundError("unknown run '" + run + "'");
  }
  return p;
}

namespace {

nlohmann::json manifest_of(const fs::path& run) {
  try {
    return run::read_manifest(run);
  } catch (const ValidationError& e) {
    throw IngestionError(e.what());
  }
}

std::vector<int> snapshots_of(const fs::path& run) {
  manifest_of(run);
  try {
    return run::list_snapshots(run);
  } catch (const ValidationError& e) {
    throw IngestionError(e.what());
  } catch (const NotFoundError&) {
    return {};
  }
}

train::EmbeddingSnapshot load_snapshot(const fs::path& run, int iteration) {
  auto iters = snapshots_of(run);
  if (!std::binary_search(iters.begin(), iters.end(), iteration)) {
    throw NotFoundError("no snapshot at iteration " + std::to_string(iteration));
  }
  try {
    return train::read_snapshot_jsonl(run / train::snapshot_file_name(iteration),
                                      iteration);
  } catch (const NotFoundError& e) {
    throw IngestionError(e.what());
  }
}

std::vector<AnalystTag> read_tags(const fs::path& run) {
  std::vector<AnalystTag> out;
  std::ifstream in(run / run::kTags, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(AnalystTag::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw IngestionError("tags.jsonl:" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, AnalystTag> latest_of(const std::vector<AnalystTag>& tags) {
  std::map<std::string, AnalystTag> out;
  for (const auto& t : tags) out.insert_or_assign(t.entity_id, t);
  return out;
}

nlohmann::json risk_fields(const fs::path& run, const std::string& id,
                           bool fincrime) {
  nlohmann::json risk = {{"fincrime_risk_exit", fincrime}};
  auto sep = id.find(graph::kBankSeparator);
  if (sep == std::string::npos || !fs::exists(run / "tables")) return risk;
  std::string bank = id.substr(0, sep);
  std::string entity = id.substr(sep + std::string_view(graph::kBankSeparator).size());
  risk["bank_id"] = bank;
  risk["customer_entity"] = entity;
  return risk;
}

}  // namespace

nlohmann::json Workbench::list_runs() const {
  nlohmann::json out = nlohmann::json::array();
  if (!fs::is_directory(root_)) return out;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::is_regular_file(entry.path() / run::kManifest)) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    nlohmann::json item = {{"id", name}};
    try {
      auto manifest = run::read_manifest(root_ / name);
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& [k, v] : manifest.items()) stages.push_back(k);
      item["stages"] = stages;
      item["snapshots"] = snapshots_of(root_ / name);
    } catch (const Error& e) {
      item["error"] = e.what();
    }
    out.push_back(item);
  }
  return out;
}

std::vector<int> Workbench::list_snapshots(const std::string& run) const {
  auto path = run_path(run);
  auto manifest = manifest_of(path);
  if (!manifest.contains("train")) {
    throw NotFoundError("run '" + run + "' has no snapshots");
  }
  return snapshots_of(path);
}

SnapshotPage Workbench::get_snapshot(const std::string& run, int iteration,
                                     const SnapshotFilter& filter) const {
  auto path = run_path(run);
  auto snapshot = load_snapshot(path, iteration);
  auto latest = latest_tags(run);
  SnapshotPage page;
  page.records = nlohmann::json::array();
  for (const auto& r : snapshot.records) {
    if (filter.min_degree && r.degree < *filter.min_degree) continue;
    if (filter.fincrime_only && !r.fincrime) continue;
    std::size_t position = page.total++;
    if (position < filter.offset) continue;
    if (filter.limit && page.records.size() >= *filter.limit) continue;
    auto tag = latest.find(r.id);
    page.records.push_back(
        {{"id", r.id},
         {"vec", r.vec},
         {"degree", r.degree},
         {"fincrime", r.fincrime},
         {"latest_tag", tag == latest.end() ? nlohmann::json(nullptr)
                                            : tag->second.to_json()}});
  }
  return page;
}

nlohmann::json Workbench::get_entity(const std::string& run, const std::string& id,
                                     std::optional<int> iteration) const {
  auto path = run_path(run);
  auto iters = snapshots_of(path);
  if (iters.empty()) throw NotFoundError("run '" + run + "' has no snapshots");
  int iter = iteration.value_or(iters.back());
  auto snapshot = load_snapshot(path, iter);
  auto record = std::find_if(snapshot.records.begin(), snapshot.records.end(),
                             [&](const auto& r) { return r.id == id; });
  if (record == snapshot.records.end()) {
    throw NotFoundError("unknown entity '" + id + "'");
  }
  graph::Adjacency adjacency;
  if (fs::exists(path / run::kEdges)) {
    adjacency = graph::make_adjacency(graph::read_edges_tsv(path / run::kEdges));
  }
  auto view = analysis::entity_view(snapshot, id, adjacency);
  nlohmann::json out = view.to_json();
  out["iteration"] = iter;
  out["degree"] = record->degree;
  out["fincrime"] = record->fincrime;
  out["risk"] = risk_fields(path, id, record->fincrime);
  nlohmann::json history = nlohmann::json::array();
  nlohmann::json latest = nullptr;
  for (const auto& t : tags(run)) {
    if (t.entity_id != id) continue;
    history.push_back(t.to_json());
    latest = t.to_json();
  }
  out["tags"] = history;
  out["latest_tag"] = latest;
  return out;
}

nlohmann::json Workbench::post_tag(const std::string& run,
                                   const nlohmann::json& body) {
  auto path = run_path(run);
  AnalystTag tag = AnalystTag::from_json(body);
  if (!fs::exists(path / run::kEdges)) {
    throw NotFoundError("run '" + run + "' has no entity graph");
  }
  bool known = false;
  for (const auto& e : graph::read_edges_tsv(path / run::kEdges)) {
    if (e.id1 == tag.entity_id || e.id2 == tag.entity_id) {
      known = true;
      break;
    }
  }
  if (!known) throw NotFoundError("unknown entity '" + tag.entity_id + "'");
  tag.timestamp = clock_();
  std::string line = tag.to_json().dump() + "\n";
  {
    std::lock_guard lock(tags_mu_);
    std::ofstream out(path / run::kTags, std::ios::binary | std::ios::app);
    if (!out) throw IngestionError("cannot append to tags file");
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw IngestionError("failed writing tags file");
  }
  return {{"status", "ok"}, {"tag", tag.to_json()}};
}

nlohmann::json Workbench::get_detections(const std::string& run) const {
  auto path = run_path(run);
  nlohmann::json out = nlohmann::json::array();
  fs::path dir = path / "reports";
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      out.push_back(run::read_json(f));
    } catch (const ValidationError& e) {
      throw IngestionError(e.what());
    }
  }
  return out;
}

std::vector<AnalystTag> Workbench::tags(const std::string& run) const {
  auto path = run_path(run);
  std::lock_guard lock(tags_mu_);
  return read_tags(path);
}

std::map<std::string, AnalystTag> Workbench::latest_tags(
    const std::string& run) const {
  return latest_of(tags(run));
}

ErrorResponse error_response(const std::exception& e) {
  ErrorResponse r;
  std::string code = "internal";
  if (dynamic_cast<const NotFoundError*>(&e)) {
    r.status = 404;
    code = "not_found";
  } else if (dynamic_cast<const ValidationError*>(&e) ||
             dynamic_cast<const ConfigError*>(&e) ||
             dynamic_cast<const nlohmann::json::exception*>(&e)) {
    r.status = 400;
    code = "bad_request";
  } else if (dynamic_cast<const IngestionError*>(&e)) {
    r.status = 500;
    code = "corrupt_run";
  }
  r.body = {{"code", code}, {"message", e.what()}};
  return r;
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

std::size_t parse_count(const httplib::Request& req, const char* name) {
  const std::string value = req.get_param_value(name);
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ValidationError(std::string("query parameter '") + name +
                          "' must be a non-negative integer");
  }
  return out;
}

int parse_iteration(const std::string& value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ValidationError("iteration must be an integer, got '" + value + "'");
  }
  return out;
}

bool parse_flag(const std::string& value) {
  try {
    return parse_bool(value);
  } catch (const Error&) {
    throw ValidationError("expected a boolean, got '" + value + "'");
  }
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const std::exception& e) {
      auto err = error_response(e);
      send_json(res, err.status, err.body);
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(Workbench& w) : workbench(w) {}
  Workbench& workbench;
  httplib::Server server;
};

HttpServer::HttpServer(Workbench& workbench)
    : impl_(std::make_unique<Impl>(workbench)) {
  auto& srv = impl_->server;
  Workbench& wb = workbench;

  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  srv.Get("/api/runs", guarded([&wb](const auto&, auto& res) {
            send_json(res, 200, wb.list_runs());
          }));
  srv.Get(R"(/api/runs/([^/]+)/snapshots)",
          guarded([&wb](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, wb.list_snapshots(req.matches[1]));
          }));
  srv.Get(R"(/api/runs/([^/]+)/snapshots/([^/]+))",
          guarded([&wb](const httplib::Request& req, httplib::Response& res) {
            SnapshotFilter filter;
            if (req.has_param("min_degree")) filter.min_degree = parse_count(req, "min_degree");
            if (req.has_param("fincrime_only")) {
              filter.fincrime_only = parse_flag(req.get_param_value("fincrime_only"));
            }
            if (req.has_param("offset")) filter.offset = parse_count(req, "offset");
            if (req.has_param("limit")) filter.limit = parse_count(req, "limit");
            auto page = wb.get_snapshot(req.matches[1],
                                        parse_iteration(req.matches[2]), filter);
            res.set_header("X-Total-Count", std::to_string(page.total));
            send_json(res, 200, page.records);
          }));
  srv.Get(R"(/api/runs/([^/]+)/entities/([^/]+))",
          guarded([&wb](const httplib::Request& req, httplib::Response& res) {
            std::optional<int> iter;
            if (req.has_param("iter")) iter = parse_iteration(req.get_param_value("iter"));
            send_json(res, 200, wb.get_entity(req.matches[1], req.matches[2], iter));
          }));
  srv.Post(R"(/api/runs/([^/]+)/tags)",
           guarded([&wb](const httplib::Request& req, httplib::Response& res) {
             nlohmann::json body;
             try {
               body = nlohmann::json::parse(req.body);
             } catch (const nlohmann::json::exception& e) {
               throw ValidationError(std::string("malformed JSON body: ") + e.what());
             }
             send_json(res, 201, wb.post_tag(req.matches[1], body));
           }));
  srv.Get(R"(/api/runs/([^/]+)/detections)",
          guarded([&wb](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, wb.get_detections(req.matches[1]));
          }));

  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_json(res, 404, {{"code", "not_found"}, {"message", "no route for " + req.path}});
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

bool HttpServer::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

void HttpServer::stop() { impl_->server.stop(); }

bool HttpServer::is_running() const { return impl_->server.is_running(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace amlwb::service
