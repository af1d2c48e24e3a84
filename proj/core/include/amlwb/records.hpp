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

// Account and transaction records shared by the generator and detectors.

#ifndef AMLWB_RECORDS_HPP_
#define AMLWB_RECORDS_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amlwb/date.hpp"
#include "amlwb/table.hpp"

namespace amlwb {

/// Currency amount in integer cents so ledger sums are exact.
struct Money {
  std::int64_t cents = 0;

  friend auto operator<=>(const Money&, const Money&) = default;
  Money& operator+=(Money o) {
    cents += o.cents;
    return *this;
  }
  Money& operator-=(Money o) {
    cents -= o.cents;
    return *this;
  }
  friend Money operator+(Money a, Money b) { return Money{a.cents + b.cents}; }
  friend Money operator-(Money a, Money b) { return Money{a.cents - b.cents}; }

  double units() const { return static_cast<double>(cents) / 100.0; }
};

/// "123.45" style decimal; throws MalformedRecordError.
Money parse_money(std::string_view text);
std::string format_money(Money m);

struct Account {
  std::string account_id;
  std::string customer_id;
  std::string bank_id;
  Date open_date;
  std::optional<Date> close_date;
};

struct Transaction {
  std::string txn_id;
  std::string src_account;
  std::string dst_account;
  Money amount;
  Timestamp timestamp;
};

/// (bank_id, customer_id) flagged fincrime_risk_exit in RISK.
struct RiskFlag {
  std::string bank_id;
  std::string customer_id;
  bool fincrime_risk_exit = false;
};

inline constexpr const char* kAccountColumns[] = {
    "account_id", "customer_id", "bank_id", "open_date", "close_date"};
inline constexpr const char* kTransactionColumns[] = {
    "txn_id", "src_account", "dst_account", "amount", "timestamp"};

std::vector<Account> accounts_from_table(const Table& t);
std::vector<Transaction> transactions_from_table(const Table& t);
std::vector<RiskFlag> risk_flags_from_table(const Table& t);

Table accounts_to_table(const std::vector<Account>& accounts);
Table transactions_to_table(const std::vector<Transaction>& txns);

/// "true"/"false" (case-insensitive, also 1/0); throws MalformedRecordError.
bool parse_bool(std::string_view text);

}  // namespace amlwb

#endif  // AMLWB_RECORDS_HPP_
