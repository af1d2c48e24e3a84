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

// Read-mostly HTTP facade over a directory of runs.
//
//   GET  /api/runs
//   GET  /api/runs/{run}/snapshots
//   GET  /api/runs/{run}/snapshots/{iter}?min_degree=&fincrime_only=&offset=&limit=
//   GET  /api/runs/{run}/entities/{id}?iter=
//   POST /api/runs/{run}/tags        {"entity_id", "verdict", "note"}
//   GET  /api/runs/{run}/detections
//
// Errors are {"code", "message"} with 400 (bad request), 404 (unknown run,
// iteration or entity) or 500 (unreadable artifacts). The only file ever
// written is <run>/tags.jsonl, appended one tag per line.

#ifndef AMLWB_SERVICE_HPP_
#define AMLWB_SERVICE_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace amlwb::service {

inline constexpr const char* kVerdicts[] = {"suspicious", "clean", "unknown"};

struct AnalystTag {
  std::string entity_id;
  std::string verdict;
  std::string note;
  std::string timestamp;

  nlohmann::json to_json() const;
  /// Throws ValidationError.
  static AnalystTag from_json(const nlohmann::json& j);
};

struct SnapshotFilter {
  std::optional<std::size_t> min_degree;
  bool fincrime_only = false;
  std::size_t offset = 0;
  std::optional<std::size_t> limit;
};

struct SnapshotPage {
  nlohmann::json records;  // array
  std::size_t total = 0;   // matches before offset/limit
};

/// UTC "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now();

/// Request handling without the transport. Methods throw NotFoundError,
/// ValidationError or IngestionError; the HTTP layer maps them to status
/// codes.
class Workbench {
 public:
  using Clock = std::function<std::string()>;

  explicit Workbench(std::filesystem::path root, Clock clock = utc_now);

  const std::filesystem::path& root() const { return root_; }

  nlohmann::json list_runs() const;
  std::vector<int> list_snapshots(const std::string& run) const;
  SnapshotPage get_snapshot(const std::string& run, int iteration,
                            const SnapshotFilter& filter = {}) const;
  /// `iteration` defaults to the last snapshot.
  nlohmann::json get_entity(const std::string& run, const std::string& id,
                            std::optional<int> iteration = {}) const;
  nlohmann::json post_tag(const std::string& run, const nlohmann::json& body);
  nlohmann::json get_detections(const std::string& run) const;

  /// Every tag for the run in file order.
  std::vector<AnalystTag> tags(const std::string& run) const;
  /// Last tag per entity.
  std::map<std::string, AnalystTag> latest_tags(const std::string& run) const;

 private:
  std::filesystem::path run_path(const std::string& run) const;

  std::filesystem::path root_;
  Clock clock_;
  mutable std::mutex tags_mu_;
};

/// {"code", "message"} body and HTTP status for the exception in flight.
struct ErrorResponse {
  int status = 500;
  nlohmann::json body;
};
ErrorResponse error_response(const std::exception& e);

/// Owns the listening socket; one instance per process.
class HttpServer {
 public:
  explicit HttpServer(Workbench& workbench);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to an ephemeral port and returns it; call listen_after_bind()
  /// afterwards (typically on another thread).
  int bind_to_any_port(const std::string& host = "127.0.0.1");
  bool listen_after_bind();
  /// Blocks until stop() is called.
  bool listen(const std::string& host, int port);
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace amlwb::service

#endif  // AMLWB_SERVICE_HPP_
