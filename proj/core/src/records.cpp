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

#include "amlwb/records.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "amlwb/error.hpp"

namespace amlwb {

namespace {

const std::string& required(const Table& t, const Row& row, std::size_t col,
                            std::size_t row_index) {
  if (!row[col]) {
    throw MalformedRecordError(t.name + " row " + std::to_string(row_index) +
                               ": column " + t.columns[col] + " is empty");
  }
  return *row[col];
}

}  // namespace

Money parse_money(std::string_view text) {
  bool negative = !text.empty() && text.front() == '-';
  if (negative) text.remove_prefix(1);
  auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac =
      dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 2) {
    throw MalformedRecordError("bad amount '" + std::string(text) + "'");
  }
  std::int64_t units = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), units);
  if (ec != std::errc() || p != whole.data() + whole.size()) {
    throw MalformedRecordError("bad amount '" + std::string(text) + "'");
  }
  std::int64_t cents = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    cents *= 10;
    if (i < frac.size()) {
      if (!std::isdigit(static_cast<unsigned char>(frac[i]))) {
        throw MalformedRecordError("bad amount '" + std::string(text) + "'");
      }
      cents += frac[i] - '0';
    }
  }
  std::int64_t total = units * 100 + cents;
  return Money{negative ? -total : total};
}

std::string format_money(Money m) {
  std::int64_t c = m.cents < 0 ? -m.cents : m.cents;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", m.cents < 0 ? "-" : "",
                static_cast<long long>(c / 100), static_cast<long long>(c % 100));
  return buf;
}

bool parse_bool(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "true" || lower == "1") return true;
  if (lower == "false" || lower == "0") return false;
  throw MalformedRecordError("bad boolean '" + std::string(text) + "'");
}

std::vector<Account> accounts_from_table(const Table& t) {
  const auto id = t.column("account_id");
  const auto cust = t.column("customer_id");
  const auto bank = t.column("bank_id");
  const auto open = t.column("open_date");
  const auto close = t.column("close_date");
  std::vector<Account> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const Row& r = t.rows[i];
    Account a{required(t, r, id, i), required(t, r, cust, i),
              required(t, r, bank, i), parse_date(required(t, r, open, i)),
              std::nullopt};
    if (r[close]) a.close_date = parse_date(*r[close]);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Transaction> transactions_from_table(const Table& t) {
  const auto id = t.column("txn_id");
  const auto src = t.column("src_account");
  const auto dst = t.column("dst_account");
  const auto amount = t.column("amount");
  const auto ts = t.column("timestamp");
  std::vector<Transaction> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const Row& r = t.rows[i];
    out.push_back(Transaction{required(t, r, id, i), required(t, r, src, i),
                              required(t, r, dst, i),
                              parse_money(required(t, r, amount, i)),
                              parse_timestamp(required(t, r, ts, i))});
  }
  return out;
}

std::vector<RiskFlag> risk_flags_from_table(const Table& t) {
  const auto bank = t.column("bank_id");
  const auto cust = t.column("customer_id");
  const auto flag = t.column("fincrime_risk_exit");
  std::vector<RiskFlag> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const Row& r = t.rows[i];
    out.push_back(RiskFlag{required(t, r, bank, i), required(t, r, cust, i),
                           r[flag] ? parse_bool(*r[flag]) : false});
  }
  return out;
}

Table accounts_to_table(const std::vector<Account>& accounts) {
  Table t{"ACCOUNTS", {std::begin(kAccountColumns), std::end(kAccountColumns)}, {}};
  t.rows.reserve(accounts.size());
  for (const Account& a : accounts) {
    t.rows.push_back(Row{a.account_id, a.customer_id, a.bank_id,
                         format_date(a.open_date),
                         a.close_date ? Cell{format_date(*a.close_date)}
                                      : Cell{}});
  }
  return t;
}

Table transactions_to_table(const std::vector<Transaction>& txns) {
  Table t{"TRANSACTIONS",
          {std::begin(kTransactionColumns), std::end(kTransactionColumns)},
          {}};
  t.rows.reserve(txns.size());
  for (const Transaction& x : txns) {
    t.rows.push_back(Row{x.txn_id, x.src_account, x.dst_account,
                         format_money(x.amount),
                         format_timestamp(x.timestamp)});
  }
  return t;
}

}  // namespace amlwb
