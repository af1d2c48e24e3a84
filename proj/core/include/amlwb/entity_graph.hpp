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

// Entity resolution and customer-relation graph construction.
//
//   PARTIES, CUSTOMERS --doc_id--> entity_id (per table)
//   PL   = PARTIES  ⋈ LINK      on (bank_id, related_party_id)
//   PLC  = PL       ⋈ CUSTOMERS on (LINK:bank_id, LINK:customer_id)
//   PLCR = PLC      ⟕ RISK      on (CUSTOMERS:bank_id, CUSTOMERS:customer_id)
//
// Each PLCR row becomes an edge (PARTIES:entity_id,
// CUSTOMERS:bank_id "__" CUSTOMERS:entity_id, relation_duration_months), so
// one customer banking at several banks yields several graph nodes.

#ifndef AMLWB_ENTITY_GRAPH_HPP_
#define AMLWB_ENTITY_GRAPH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlwb/date.hpp"
#include "amlwb/table.hpp"

namespace amlwb::graph {

inline constexpr std::string_view kBankSeparator = "__";

/// Trim surrounding whitespace and lower-case; the optional exact
/// normalization applied before doc id derivation.
std::string normalize_identifier(std::string_view raw);

/// "individual_<id_doc_number>" or "company_<company_registration_id>".
/// Exactly one identifier must be present (non-null, nonempty after
/// trimming); otherwise MalformedRecordError mentioning `context`.
std::string make_doc_id(const Cell& id_doc_number,
                        const Cell& company_registration_id,
                        bool normalize = false, std::string_view context = {});

/// Appends a doc_id column derived from id_doc_number and
/// company_registration_id.
void add_doc_ids(Table& table, bool normalize = false);

/// Appends an entity_id column: prefix + 1-based index of the row's doc_id
/// in first-occurrence order. Returns the number of distinct entities.
std::size_t resolve_entities(Table& table, std::string_view prefix = "E");

/// Whole calendar months from start to end (or corpus_end when the relation
/// is open), floored. MalformedRecordError when start is after that date.
int relation_duration(Date start, std::optional<Date> end, Date corpus_end);

/// Appends relation_duration_months computed from relation_start_date and
/// relation_end_date.
void add_relation_durations(Table& link, Date corpus_end);

enum class JoinKind { kInner, kLeft };

/// Hash join. Key names are looked up verbatim; output columns are
/// qualified as "<TABLE>:<column>" unless already qualified. Rows keep left
/// order, then right order within a key. Null keys never match.
Table hash_join(const Table& left, const Table& right,
                const std::vector<std::string>& left_keys,
                const std::vector<std::string>& right_keys, JoinKind kind,
                std::string name);

Table join_relations(const Table& parties, const Table& link,
                     const Table& customers, const Table& risk);

struct RelationEdge {
  std::string id1;  // party entity
  std::string id2;  // bank-qualified customer entity
  std::int64_t weight = 0;

  friend auto operator<=>(const RelationEdge&, const RelationEdge&) = default;
};

struct RelationGraph {
  /// Sorted by (id1, id2, weight); exact duplicates removed.
  std::vector<RelationEdge> edges;
  /// Distinct node ids in first-occurrence order over `edges`.
  std::vector<std::string> nodes;
  /// Undirected degree (edge multiplicity counted).
  std::map<std::string, std::size_t> degree;
  /// Customer-side nodes whose RISK row has fincrime_risk_exit = true.
  std::set<std::string> flagged;

  nlohmann::json stats_json() const;
};

/// Builds the edge list from a PLCR table. Uses
/// LINK:relation_duration_months when present, otherwise derives it from
/// the LINK date columns and `corpus_end`.
RelationGraph build_edge_list(const Table& plcr, Date corpus_end);

/// Graph over an explicit edge list (flags empty).
RelationGraph graph_from_edges(std::vector<RelationEdge> edges);

/// Neighbor lists with edge multiplicity, keyed by node id.
using Adjacency = std::unordered_map<std::string, std::vector<std::string>>;
Adjacency make_adjacency(std::span<const RelationEdge> edges);

/// id1 TAB id2 TAB weight, one edge per line, no header.
void write_edges_tsv(const std::filesystem::path& path,
                     std::span<const RelationEdge> edges);
std::vector<RelationEdge> read_edges_tsv(const std::filesystem::path& path);

struct BuildOptions {
  bool normalize = false;
};

struct BuildResult {
  RelationGraph graph;
  std::size_t plcr_rows = 0;
  std::size_t party_entities = 0;
  std::size_t customer_entities = 0;
};

/// Runs resolution, joins and edge construction over the corpus written
/// under `dir` (see synth::write_corpus).
BuildResult build_from_corpus(const std::filesystem::path& dir,
                              Date corpus_end, const BuildOptions& options = {});

}  // namespace amlwb::graph

#endif  // AMLWB_ENTITY_GRAPH_HPP_
