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

#include "amlwb/detectors.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "amlwb/error.hpp"

namespace amlwb::detect {

namespace {

std::string customer_key(const std::string& bank, const std::string& customer) {
  return bank + '\x1f' + customer;
}

}  // namespace

nlohmann::json DetectionReport::to_json() const {
  nlohmann::json j = {{"detector", detector},
                      {"params", params},
                      {"flagged", flagged},
                      {"flagged_count", flagged.size()},
                      {"status", status},
                      {"warnings", warnings}};
  if (metrics) {
    j["metrics"] = {{"precision", metrics->precision},
                    {"recall", metrics->recall},
                    {"true_positives", metrics->true_positives},
                    {"flagged", metrics->flagged},
                    {"truth", metrics->truth}};
  } else {
    j["metrics"] = nullptr;
  }
  return j;
}

DetectionReport DetectionReport::from_json(const nlohmann::json& j) {
  DetectionReport r;
  r.detector = j.at("detector").get<std::string>();
  r.params = j.value("params", nlohmann::json::object());
  r.flagged = j.at("flagged").get<std::vector<std::string>>();
  r.status = j.value("status", std::string("ok"));
  r.warnings = j.value("warnings", std::vector<std::string>{});
  if (j.contains("metrics") && !j["metrics"].is_null()) {
    const auto& m = j["metrics"];
    r.metrics = Metrics{m.at("precision").get<double>(),
                        m.at("recall").get<double>(),
                        m.at("true_positives").get<std::size_t>(),
                        m.at("flagged").get<std::size_t>(),
                        m.at("truth").get<std::size_t>()};
  }
  return r;
}

DetectionReport detect_collecting(std::span<const Account> accounts,
                                  std::span<const RiskFlag> risk,
                                  std::span<const Transaction> transactions,
                                  const CollectingParams& params) {
  std::unordered_set<std::string> banned_customers;
  for (const RiskFlag& r : risk) {
    if (r.fincrime_risk_exit) {
      banned_customers.insert(customer_key(r.bank_id, r.customer_id));
    }
  }

  std::unordered_map<std::string, bool> criminal_owned;
  std::unordered_set<std::string> short_lived;
  for (const Account& a : accounts) {
    if (a.close_date) {
      if (*a.close_date < a.open_date) {
        throw MalformedRecordError("account " + a.account_id +
                                   " closes before it opens");
      }
      if (whole_months_between(a.open_date, *a.close_date) <=
          params.window_months) {
        short_lived.insert(a.account_id);
      }
    }
    criminal_owned[a.account_id] =
        banned_customers.count(customer_key(a.bank_id, a.customer_id)) > 0;
  }

  std::unordered_map<std::string, std::set<std::string>> criminal_senders;
  for (const Transaction& t : transactions) {
    auto src = criminal_owned.find(t.src_account);
    if (src == criminal_owned.end() || !criminal_owned.count(t.dst_account)) {
      throw IngestionError("transaction " + t.txn_id +
                           " references an unknown account");
    }
    if (src->second && short_lived.count(t.dst_account)) {
      criminal_senders[t.dst_account].insert(t.src_account);
    }
  }

  DetectionReport report;
  report.detector = "collecting_network";
  report.params = {{"window_months", params.window_months},
                   {"min_criminal_senders", params.min_criminal_senders}};
  for (const auto& [account, senders] : criminal_senders) {
    if (senders.size() >= params.min_criminal_senders) {
      report.flagged.push_back(account);
    }
  }
  std::sort(report.flagged.begin(), report.flagged.end());
  return report;
}

std::vector<WeeklyAggregate> weekly_bins(
    std::span<const Transaction> transactions,
    std::span<const Account> accounts, Date corpus_start) {
  std::unordered_set<std::string> known;
  for (const Account& a : accounts) known.insert(a.account_id);

  const Timestamp origin{corpus_start};
  std::map<std::pair<std::string, std::int64_t>, WeeklyAggregate> bins;
  auto bin = [&](const std::string& account,
                 std::int64_t week) -> WeeklyAggregate& {
    auto [it, inserted] = bins.try_emplace({account, week});
    if (inserted) {
      it->second.account_id = account;
      it->second.week_index = week;
    }
    return it->second;
  };

  for (const Transaction& t : transactions) {
    if (!known.count(t.src_account) || !known.count(t.dst_account)) {
      throw IngestionError("transaction " + t.txn_id +
                           " references an unknown account");
    }
    if (t.timestamp < origin) {
      throw IngestionError("transaction " + t.txn_id +
                           " precedes the corpus start");
    }
    std::int64_t week =
        std::chrono::floor<std::chrono::weeks>(t.timestamp - origin).count();
    WeeklyAggregate& out = bin(t.src_account, week);
    ++out.outbound_count;
    out.outbound_sum += t.amount;
    WeeklyAggregate& in = bin(t.dst_account, week);
    ++in.inbound_count;
    in.inbound_sum += t.amount;
  }

  std::vector<WeeklyAggregate> result;
  result.reserve(bins.size());
  Money balance;
  const std::string* current = nullptr;
  for (auto& [key, agg] : bins) {
    if (!current || *current != key.first) {
      balance = Money{0};
      current = &key.first;
    }
    balance += agg.inbound_sum;
    balance -= agg.outbound_sum;
    agg.end_balance = balance;
    result.push_back(agg);
  }
  return result;
}

DetectionReport detect_layered(std::span<const WeeklyAggregate> weekly,
                               std::span<const Transaction> transactions,
                               const std::set<std::string>& criminal_accounts,
                               double ratio) {
  DetectionReport report;
  report.detector = "layered_network";
  report.params = {{"ratio", ratio},
                   {"criminal_accounts", criminal_accounts.size()}};
  if (criminal_accounts.empty()) {
    report.status = "warning";
    report.warnings.push_back("no criminal accounts supplied; nothing to trace");
    return report;
  }

  std::set<std::string> candidates;
  for (const Transaction& t : transactions) {
    bool src = criminal_accounts.count(t.src_account) > 0;
    bool dst = criminal_accounts.count(t.dst_account) > 0;
    if (src && !dst) candidates.insert(t.dst_account);
    if (dst && !src) candidates.insert(t.src_account);
  }

  // An account passes when it has at least one inbound week and every
  // inbound week closes at or below ratio x inbound.
  std::map<std::string, std::pair<bool, bool>> verdict;  // {has_inbound, ok}
  for (const WeeklyAggregate& w : weekly) {
    if (!candidates.count(w.account_id) || w.inbound_sum.cents == 0) continue;
    auto& [has_inbound, ok] = verdict.try_emplace(w.account_id, false, true)
                                  .first->second;
    has_inbound = true;
    double limit = ratio * static_cast<double>(w.inbound_sum.cents);
    if (static_cast<double>(w.end_balance.cents) > limit) ok = false;
  }
  for (const auto& [account, v] : verdict) {
    if (v.first && v.second) report.flagged.push_back(account);
  }
  return report;
}

Metrics score(std::span<const std::string> flagged,
              const std::set<std::string>& truth) {
  std::set<std::string> unique(flagged.begin(), flagged.end());
  Metrics m;
  m.flagged = unique.size();
  m.truth = truth.size();
  for (const auto& f : unique) m.true_positives += truth.count(f);
  m.precision = m.flagged == 0 ? (m.truth == 0 ? 1.0 : 0.0)
                               : static_cast<double>(m.true_positives) /
                                     static_cast<double>(m.flagged);
  m.recall = m.truth == 0 ? 1.0
                          : static_cast<double>(m.true_positives) /
                                static_cast<double>(m.truth);
  return m;
}

}  // namespace amlwb::detect
