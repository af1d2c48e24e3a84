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

// Rule-based laundering detectors.
//
// Collecting network: an account whose lifetime (open to close) spans at most
// `window_months` whole calendar months and which received transfers from at
// least `min_criminal_senders` distinct accounts owned by customers with
// fincrime_risk_exit = true.
//
// Layered network: an account with at least one transfer to or from a known
// criminal account, and whose end-of-week balance stays within
// `ratio` x inbound sum in every week that has inbound activity. Weeks are
// 7-day bins counted from the corpus start date; balances are a running
// ledger starting at zero.

#ifndef AMLWB_DETECTORS_HPP_
#define AMLWB_DETECTORS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlwb/date.hpp"
#include "amlwb/records.hpp"

namespace amlwb::detect {

struct WeeklyAggregate {
  std::string account_id;
  std::int64_t week_index = 0;
  std::uint32_t inbound_count = 0;
  std::uint32_t outbound_count = 0;
  Money inbound_sum;
  Money outbound_sum;
  Money end_balance;

  friend bool operator==(const WeeklyAggregate&,
                         const WeeklyAggregate&) = default;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t flagged = 0;
  std::size_t truth = 0;
};

struct DetectionReport {
  std::string detector;
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> flagged;  // sorted, unique
  std::optional<Metrics> metrics;
  std::string status = "ok";  // "ok" | "warning"
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static DetectionReport from_json(const nlohmann::json& j);
};

struct CollectingParams {
  int window_months = 8;
  std::size_t min_criminal_senders = 3;
};

/// Throws MalformedRecordError when an account closes before it opens and
/// IngestionError when a transaction references an unknown account.
DetectionReport detect_collecting(std::span<const Account> accounts,
                                  std::span<const RiskFlag> risk,
                                  std::span<const Transaction> transactions,
                                  const CollectingParams& params = {});

/// One aggregate per (account, week) with activity, sorted by account id then
/// week. Each transfer counts as outbound for its source and inbound for its
/// destination. Throws IngestionError for unknown accounts or timestamps
/// before `corpus_start`.
std::vector<WeeklyAggregate> weekly_bins(
    std::span<const Transaction> transactions,
    std::span<const Account> accounts, Date corpus_start);

/// `transactions` supplies the counterparties used to select candidates.
/// An empty criminal set yields an empty report with status "warning".
DetectionReport detect_layered(std::span<const WeeklyAggregate> weekly,
                               std::span<const Transaction> transactions,
                               const std::set<std::string>& criminal_accounts,
                               double ratio = 0.2);

/// Set precision and recall. An empty flagged set has precision 1 when the
/// truth is also empty and 0 otherwise; an empty truth set has recall 1.
Metrics score(std::span<const std::string> flagged,
              const std::set<std::string>& truth);

}  // namespace amlwb::detect

#endif  // AMLWB_DETECTORS_HPP_
