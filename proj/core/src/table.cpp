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

#include "amlwb/table.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "amlwb/error.hpp"

namespace amlwb {

std::optional<std::size_t> Table::find_column(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == column) return i;
  }
  return std::nullopt;
}

std::size_t Table::column(std::string_view column) const {
  if (auto i = find_column(column)) return *i;
  throw SchemaError("table " + name + " has no column '" +
                    std::string(column) + "'");
}

void Table::add_column(std::string column, std::vector<Cell> values) {
  if (values.size() != rows.size()) {
    throw SchemaError("add_column: " + std::to_string(values.size()) +
                      " values for " + std::to_string(rows.size()) + " rows");
  }
  columns.push_back(std::move(column));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].push_back(std::move(values[i]));
  }
}

CsvReader::CsvReader(std::istream& in) : in_(in) {
  std::vector<bool> quoted;
  if (!read_record(header_, quoted)) {
    throw IngestionError("csv input has no header row");
  }
  // Tolerate a UTF-8 byte order mark.
  if (!header_.empty() && header_[0].starts_with("\xEF\xBB\xBF")) {
    header_[0].erase(0, 3);
  }
}

bool CsvReader::read_record(std::vector<std::string>& fields,
                            std::vector<bool>& quoted) {
  fields.clear();
  quoted.clear();
  int c = in_.get();
  if (c == EOF) return false;
  ++line_;
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  for (;; c = in_.get()) {
    if (in_quotes) {
      if (c == EOF) {
        throw IngestionError("unterminated quoted field at line " +
                             std::to_string(line_));
      }
      if (c == '"') {
        if (in_.peek() == '"') {
          field.push_back('"');
          in_.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == '"' && field.empty() && !was_quoted) {
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      quoted.push_back(was_quoted);
      field.clear();
      was_quoted = false;
    } else if (c == '\n' || c == EOF) {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      quoted.push_back(was_quoted);
      return true;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
}

bool CsvReader::next(Row& row) {
  std::vector<std::string> fields;
  std::vector<bool> quoted;
  do {
    if (!read_record(fields, quoted)) return false;
  } while (fields.size() == 1 && fields[0].empty() && !quoted[0]);
  if (fields.size() != header_.size()) {
    throw IngestionError("line " + std::to_string(line_) + ": expected " +
                         std::to_string(header_.size()) + " fields, found " +
                         std::to_string(fields.size()));
  }
  row.clear();
  row.reserve(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].empty() && !quoted[i]) {
      row.emplace_back(std::nullopt);
    } else {
      row.emplace_back(std::move(fields[i]));
    }
  }
  return true;
}

Table read_csv(const std::filesystem::path& path, std::string table_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  CsvReader reader(in);
  Table t{std::move(table_name), reader.header(), {}};
  Row row;
  while (reader.next(row)) t.rows.push_back(row);
  return t;
}

void for_each_csv_row(
    const std::filesystem::path& path,
    const std::function<void(const std::vector<std::string>&, const Row&)>&
        fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  CsvReader reader(in);
  Row row;
  while (reader.next(row)) fn(reader.header(), row);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(table.columns[i]);
  }
  out << '\n';
  for (const Row& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (row[i]) {
        // An empty non-null string must survive a round trip.
        out << (row[i]->empty() ? std::string("\"\"") : csv_escape(*row[i]));
      }
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  write_csv(out, table);
}

}  // namespace amlwb
