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

#include "amlwb/entity_graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <unordered_set>

#include "amlwb/error.hpp"
#include "amlwb/records.hpp"
#include "amlwb/synth.hpp"

namespace amlwb::graph {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool present(const Cell& c) { return c && !trim(*c).empty(); }

std::string qualify(const Table& t, const std::string& column) {
  if (column.find(':') != std::string::npos) return column;
  return t.name + ":" + column;
}

std::string join_key(const Row& row, const std::vector<std::size_t>& cols,
                     bool& has_null) {
  std::string key;
  has_null = false;
  for (std::size_t c : cols) {
    if (!row[c]) {
      has_null = true;
      return {};
    }
    key += *row[c];
    key.push_back('\x1f');
  }
  return key;
}

}  // namespace

std::string normalize_identifier(std::string_view raw) {
  std::string out(trim(raw));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string make_doc_id(const Cell& id_doc_number,
                        const Cell& company_registration_id, bool normalize,
                        std::string_view context) {
  bool person = present(id_doc_number);
  bool company = present(company_registration_id);
  if (person == company) {
    throw MalformedRecordError(
        std::string(person ? "both id_doc_number and company_registration_id"
                           : "neither id_doc_number nor company_registration_id") +
        " present" + (context.empty() ? "" : " (" + std::string(context) + ")"));
  }
  const std::string& raw = person ? *id_doc_number : *company_registration_id;
  std::string value = normalize ? normalize_identifier(raw) : raw;
  return (person ? "individual_" : "company_") + value;
}

void add_doc_ids(Table& table, bool normalize) {
  auto doc = table.find_column("id_doc_number");
  auto reg = table.find_column("company_registration_id");
  if (!doc && !reg) {
    throw SchemaError("table " + table.name +
                      " has neither id_doc_number nor company_registration_id");
  }
  std::vector<Cell> ids;
  ids.reserve(table.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const Row& r = table.rows[i];
    ids.emplace_back(make_doc_id(doc ? r[*doc] : Cell{}, reg ? r[*reg] : Cell{},
                                 normalize,
                                 table.name + " row " + std::to_string(i)));
  }
  table.add_column("doc_id", std::move(ids));
}

std::size_t resolve_entities(Table& table, std::string_view prefix) {
  const std::size_t doc = table.column("doc_id");
  std::unordered_map<std::string, std::string> assigned;
  std::vector<Cell> ids;
  ids.reserve(table.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const Cell& d = table.rows[i][doc];
    if (!d) {
      throw MalformedRecordError(table.name + " row " + std::to_string(i) +
                                 ": null doc_id");
    }
    auto [it, inserted] = assigned.try_emplace(*d);
    if (inserted) {
      it->second = std::string(prefix) + std::to_string(assigned.size());
    }
    ids.emplace_back(it->second);
  }
  table.add_column("entity_id", std::move(ids));
  return assigned.size();
}

int relation_duration(Date start, std::optional<Date> end, Date corpus_end) {
  Date until = end.value_or(corpus_end);
  if (start > until) {
    throw MalformedRecordError("relation starts " + format_date(start) +
                               " after it ends " + format_date(until));
  }
  return whole_months_between(start, until);
}

void add_relation_durations(Table& link, Date corpus_end) {
  const std::size_t s = link.column("relation_start_date");
  const std::size_t e = link.column("relation_end_date");
  std::vector<Cell> months;
  months.reserve(link.size());
  for (std::size_t i = 0; i < link.rows.size(); ++i) {
    const Row& r = link.rows[i];
    if (!r[s]) {
      throw MalformedRecordError("LINK row " + std::to_string(i) +
                                 ": missing relation_start_date");
    }
    std::optional<Date> end;
    if (r[e]) end = parse_date(*r[e]);
    months.emplace_back(
        std::to_string(relation_duration(parse_date(*r[s]), end, corpus_end)));
  }
  link.add_column("relation_duration_months", std::move(months));
}

Table hash_join(const Table& left, const Table& right,
                const std::vector<std::string>& left_keys,
                const std::vector<std::string>& right_keys, JoinKind kind,
                std::string name) {
  if (left_keys.size() != right_keys.size() || left_keys.empty()) {
    throw SchemaError("join " + name + ": key lists differ in length");
  }
  std::vector<std::size_t> lk, rk;
  for (const auto& k : left_keys) lk.push_back(left.column(k));
  for (const auto& k : right_keys) rk.push_back(right.column(k));

  std::unordered_map<std::string, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < right.rows.size(); ++i) {
    bool null_key = false;
    std::string key = join_key(right.rows[i], rk, null_key);
    if (!null_key) index[std::move(key)].push_back(i);
  }

  Table out{std::move(name), {}, {}};
  for (const auto& c : left.columns) out.columns.push_back(qualify(left, c));
  for (const auto& c : right.columns) out.columns.push_back(qualify(right, c));

  for (const Row& l : left.rows) {
    bool null_key = false;
    std::string key = join_key(l, lk, null_key);
    auto it = null_key ? index.end() : index.find(key);
    if (it == index.end()) {
      if (kind == JoinKind::kLeft) {
        Row row = l;
        row.resize(out.columns.size());
        out.rows.push_back(std::move(row));
      }
      continue;
    }
    for (std::size_t ri : it->second) {
      Row row = l;
      row.insert(row.end(), right.rows[ri].begin(), right.rows[ri].end());
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

Table join_relations(const Table& parties, const Table& link,
                     const Table& customers, const Table& risk) {
  Table pl = hash_join(parties, link, {"bank_id", "related_party_id"},
                       {"bank_id", "related_party_id"}, JoinKind::kInner, "PL");
  Table plc = hash_join(pl, customers, {"LINK:bank_id", "LINK:customer_id"},
                        {"bank_id", "customer_id"}, JoinKind::kInner, "PLC");
  return hash_join(plc, risk, {"CUSTOMERS:bank_id", "CUSTOMERS:customer_id"},
                   {"bank_id", "customer_id"}, JoinKind::kLeft, "PLCR");
}

namespace {

void finish_graph(RelationGraph& g) {
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  std::unordered_set<std::string> seen;
  for (const RelationEdge& e : g.edges) {
    for (const std::string* id : {&e.id1, &e.id2}) {
      if (seen.insert(*id).second) g.nodes.push_back(*id);
      ++g.degree[*id];
    }
  }
}

}  // namespace

RelationGraph build_edge_list(const Table& plcr, Date corpus_end) {
  const std::size_t party = plcr.column("PARTIES:entity_id");
  const std::size_t bank = plcr.column("CUSTOMERS:bank_id");
  const std::size_t customer = plcr.column("CUSTOMERS:entity_id");
  const auto duration = plcr.find_column("LINK:relation_duration_months");
  std::optional<std::size_t> start, end;
  if (!duration) {
    start = plcr.column("LINK:relation_start_date");
    end = plcr.column("LINK:relation_end_date");
  }
  const auto fincrime = plcr.find_column("RISK:fincrime_risk_exit");

  RelationGraph g;
  g.edges.reserve(plcr.size());
  for (std::size_t i = 0; i < plcr.rows.size(); ++i) {
    const Row& r = plcr.rows[i];
    if (!r[party] || !r[bank] || !r[customer]) {
      throw MalformedRecordError("PLCR row " + std::to_string(i) +
                                 ": missing entity or bank id");
    }
    std::int64_t weight = 0;
    if (duration) {
      if (!r[*duration]) {
        throw MalformedRecordError("PLCR row " + std::to_string(i) +
                                   ": missing relation duration");
      }
      auto [p, ec] = std::from_chars(r[*duration]->data(),
                                     r[*duration]->data() + r[*duration]->size(),
                                     weight);
      if (ec != std::errc() || weight < 0) {
        throw MalformedRecordError("PLCR row " + std::to_string(i) +
                                   ": bad relation duration");
      }
    } else {
      if (!r[*start]) {
        throw MalformedRecordError("PLCR row " + std::to_string(i) +
                                   ": missing relation_start_date");
      }
      std::optional<Date> e;
      if (r[*end]) e = parse_date(*r[*end]);
      weight = relation_duration(parse_date(*r[*start]), e, corpus_end);
    }
    std::string id2 = *r[bank] + std::string(kBankSeparator) + *r[customer];
    if (fincrime && r[*fincrime] && parse_bool(*r[*fincrime])) {
      g.flagged.insert(id2);
    }
    if (*r[party] == id2) continue;
    g.edges.push_back(RelationEdge{*r[party], std::move(id2), weight});
  }
  finish_graph(g);
  return g;
}

RelationGraph graph_from_edges(std::vector<RelationEdge> edges) {
  RelationGraph g;
  g.edges = std::move(edges);
  finish_graph(g);
  return g;
}

nlohmann::json RelationGraph::stats_json() const {
  std::map<std::size_t, std::size_t> histogram;
  std::size_t max_degree = 0;
  for (const auto& [id, d] : degree) {
    ++histogram[d];
    max_degree = std::max(max_degree, d);
  }
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [d, n] : histogram) hist[std::to_string(d)] = n;
  return {{"nodes", nodes.size()},
          {"edges", edges.size()},
          {"max_degree", max_degree},
          {"degree_histogram", hist},
          {"flagged_nodes", flagged}};
}

Adjacency make_adjacency(std::span<const RelationEdge> edges) {
  Adjacency adj;
  for (const RelationEdge& e : edges) {
    adj[e.id1].push_back(e.id2);
    adj[e.id2].push_back(e.id1);
  }
  return adj;
}

void write_edges_tsv(const std::filesystem::path& path,
                     std::span<const RelationEdge> edges) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  for (const RelationEdge& e : edges) {
    out << e.id1 << '\t' << e.id2 << '\t' << e.weight << '\n';
  }
}

std::vector<RelationEdge> read_edges_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open edge list " + path.string());
  std::vector<RelationEdge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw IngestionError(path.string() + ":" + std::to_string(lineno) +
                           ": expected id1<TAB>id2<TAB>weight");
    }
    std::string_view w(line.data() + t2 + 1, line.size() - t2 - 1);
    std::int64_t weight = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
    if (ec != std::errc() || p != w.data() + w.size()) {
      if (lineno == 1 && line.starts_with("id1\t")) continue;  // header
      throw IngestionError(path.string() + ":" + std::to_string(lineno) +
                           ": bad weight");
    }
    if (weight < 0) {
      throw IngestionError(path.string() + ":" + std::to_string(lineno) +
                           ": negative weight");
    }
    edges.push_back(RelationEdge{line.substr(0, t1),
                                 line.substr(t1 + 1, t2 - t1 - 1), weight});
  }
  return edges;
}

BuildResult build_from_corpus(const std::filesystem::path& dir,
                              Date corpus_end, const BuildOptions& options) {
  Table customers = synth::read_corpus_table(dir, "CUSTOMERS");
  Table parties = synth::read_corpus_table(dir, "PARTIES");
  Table link = synth::read_corpus_table(dir, "LINK");
  Table risk = synth::read_corpus_table(dir, "RISK");

  BuildResult result;
  add_doc_ids(customers, options.normalize);
  add_doc_ids(parties, options.normalize);
  result.customer_entities = resolve_entities(customers, "C");
  result.party_entities = resolve_entities(parties, "P");
  add_relation_durations(link, corpus_end);
  Table plcr = join_relations(parties, link, customers, risk);
  result.plcr_rows = plcr.size();
  result.graph = build_edge_list(plcr, corpus_end);
  return result;
}

}  // namespace amlwb::graph
