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

// Minimal relational table with nullable string cells, plus RFC 4180 CSV
// reading and writing. An empty CSV field is read back as null.

#ifndef AMLWB_TABLE_HPP_
#define AMLWB_TABLE_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amlwb {

using Cell = std::optional<std::string>;
using Row = std::vector<Cell>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<Row> rows;

  /// Index of `column`; throws SchemaError naming the table when absent.
  std::size_t column(std::string_view column) const;
  std::optional<std::size_t> find_column(std::string_view column) const;

  /// Appends a column; `values` must have one entry per row.
  void add_column(std::string column, std::vector<Cell> values);

  std::size_t size() const { return rows.size(); }
};

/// Streaming CSV reader. The first record is the header.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  const std::vector<std::string>& header() const { return header_; }

  /// Reads the next record into `row`; false at end of input.
  /// Throws IngestionError when the field count differs from the header.
  bool next(Row& row);

  std::size_t line() const { return line_; }

 private:
  bool read_record(std::vector<std::string>& fields, std::vector<bool>& quoted);

  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

Table read_csv(const std::filesystem::path& path, std::string table_name);

/// Calls `fn(header, row)` for each row without materializing the table.
void for_each_csv_row(
    const std::filesystem::path& path,
    const std::function<void(const std::vector<std::string>&, const Row&)>& fn);

void write_csv(std::ostream& out, const Table& table);
void write_csv(const std::filesystem::path& path, const Table& table);

/// Quotes a field when it contains a delimiter, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace amlwb

#endif  // AMLWB_TABLE_HPP_
