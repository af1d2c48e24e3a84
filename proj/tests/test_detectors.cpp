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

#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "amlwb/detectors.hpp"
#include "amlwb/error.hpp"
#include "amlwb/rng.hpp"
#include "amlwb/synth.hpp"

namespace amlwb::detect {
namespace {

using namespace std::chrono;

const Date kStart = parse_date("2017-01-01");

Account account(std::string id, std::string customer, const char* open,
                std::optional<const char*> close = {}) {
  Account a{std::move(id), std::move(customer), "1", parse_date(open), std::nullopt};
  if (close) a.close_date = parse_date(*close);
  return a;
}

Transaction transfer(std::string src, std::string dst, std::int64_t cents,
                     const char* when) {
  static int n = 0;
  return {"T" + std::to_string(++n), std::move(src), std::move(dst), Money{cents},
          parse_timestamp(when)};
}

std::set<std::string> as_set(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

struct CollectingCase {
  std::vector<Account> accounts;
  std::vector<RiskFlag> risk;
  std::vector<Transaction> txns;
};

CollectingCase collecting_case(const char* close) {
  CollectingCase c;
  c.accounts.push_back(account("X", "cx", "2017-02-01", close));
  for (int i = 0; i < 3; ++i) {
    std::string id = "B" + std::to_string(i);
    c.accounts.push_back(account(id, "c" + id, "2016-01-01"));
    c.risk.push_back({"1", "c" + id, true});
    c.txns.push_back(transfer(id, "X", 10000, "2017-03-01T10:00:00"));
  }
  return c;
}

TEST(Collecting, ShortLivedWithThreeBannedSendersIsFlagged) {
  auto c = collecting_case("2017-07-15");
  auto r = detect_collecting(c.accounts, c.risk, c.txns);
  EXPECT_EQ(r.flagged, (std::vector<std::string>{"X"}));
  EXPECT_EQ(r.detector, "collecting_network");
}

TEST(Collecting, LongLivedOrOpenIsNotFlagged) {
  auto c = collecting_case("2018-02-01");
  EXPECT_TRUE(detect_collecting(c.accounts, c.risk, c.txns).flagged.empty());
  auto open = collecting_case("2017-07-15");
  open.accounts[0].close_date.reset();
  EXPECT_TRUE(detect_collecting(open.accounts, open.risk, open.txns).flagged.empty());
}

TEST(Collecting, WindowBoundaryIsInclusive) {
  auto c = collecting_case("2017-10-01");  // exactly 8 whole months
  EXPECT_EQ(detect_collecting(c.accounts, c.risk, c.txns).flagged.size(), 1u);
  auto d = collecting_case("2017-11-01");
  EXPECT_TRUE(detect_collecting(d.accounts, d.risk, d.txns).flagged.empty());
}

TEST(Collecting, TwoBannedSendersIsNotEnough) {
  auto c = collecting_case("2017-07-15");
  c.risk[2].fincrime_risk_exit = false;
  EXPECT_TRUE(detect_collecting(c.accounts, c.risk, c.txns).flagged.empty());
  CollectingParams p;
  p.min_criminal_senders = 2;
  EXPECT_EQ(detect_collecting(c.accounts, c.risk, c.txns, p).flagged.size(), 1u);
}

TEST(Collecting, RepeatedSenderCountsOnce) {
  auto c = collecting_case("2017-07-15");
  c.txns.pop_back();
  c.txns.push_back(transfer("B0", "X", 500, "2017-04-01T00:00:00"));
  EXPECT_TRUE(detect_collecting(c.accounts, c.risk, c.txns).flagged.empty());
}

TEST(Collecting, Errors) {
  auto c = collecting_case("2017-07-15");
  c.accounts[0].close_date = parse_date("2017-01-01");
  EXPECT_THROW(detect_collecting(c.accounts, c.risk, c.txns), MalformedRecordError);
  auto d = collecting_case("2017-07-15");
  d.txns.push_back(transfer("B0", "nope", 1, "2017-03-01T00:00:00"));
  EXPECT_THROW(detect_collecting(d.accounts, d.risk, d.txns), IngestionError);
}

TEST(Weekly, SingleInbound) {
  std::vector<Account> accounts{account("A", "a", "2016-01-01"), account("B", "b", "2016-01-01")};
  std::vector<Transaction> txns{transfer("B", "A", 10000, "2017-01-03T00:00:00")};
  auto bins = weekly_bins(txns, accounts, kStart);
  ASSERT_EQ(bins.size(), 2u);
  EXPECT_EQ(bins[0], (WeeklyAggregate{"A", 0, 1, 0, Money{10000}, Money{0}, Money{10000}}));
  EXPECT_EQ(bins[1].end_balance, Money{-10000});
}

TEST(Weekly, LedgerArithmetic) {
  std::vector<Account> accounts{account("A", "a", "2016-01-01"), account("B", "b", "2016-01-01")};
  std::vector<Transaction> txns{transfer("B", "A", 100000, "2017-01-09T00:00:00"),
                                transfer("A", "B", 95000, "2017-01-12T00:00:00"),
                                transfer("B", "A", 100, "2017-01-23T00:00:00")};
  auto bins = weekly_bins(txns, accounts, kStart);
  std::vector<WeeklyAggregate> a;
  for (const auto& b : bins) if (b.account_id == "A") a.push_back(b);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].week_index, 1);
  EXPECT_EQ(a[0].end_balance, Money{5000});
  EXPECT_EQ(a[1].week_index, 3);
  EXPECT_EQ(a[1].end_balance, Money{5100});
}

TEST(Weekly, Errors) {
  std::vector<Account> accounts{account("A", "a", "2016-01-01")};
  std::vector<Transaction> unknown{transfer("A", "Z", 1, "2017-01-03T00:00:00")};
  EXPECT_THROW(weekly_bins(unknown, accounts, kStart), IngestionError);
  std::vector<Account> two{account("A", "a", "2016-01-01"), account("B", "b", "2016-01-01")};
  std::vector<Transaction> early{transfer("A", "B", 1, "2016-12-31T23:59:59")};
  EXPECT_THROW(weekly_bins(early, two, kStart), IngestionError);
}

TEST(Layered, TwentyPercentRule) {
  std::vector<Account> accounts{account("C", "c", "2016-01-01"), account("L", "l", "2016-01-01"),
                                account("M", "m", "2016-01-01"), account("O", "o", "2016-01-01")};
  std::vector<Transaction> txns{transfer("C", "L", 100000, "2017-01-02T00:00:00"),
                                transfer("L", "O", 95000, "2017-01-03T00:00:00"),
                                transfer("C", "M", 100000, "2017-01-02T00:00:00"),
                                transfer("M", "O", 70000, "2017-01-03T00:00:00")};
  auto bins = weekly_bins(txns, accounts, kStart);
  auto r = detect_layered(bins, txns, {"C"});
  EXPECT_EQ(r.flagged, (std::vector<std::string>{"L"}));
  EXPECT_EQ(r.status, "ok");
}

TEST(Layered, OutboundOnlyWeeksIgnoredButInboundRequired) {
  std::vector<Account> accounts{account("C", "c", "2016-01-01"), account("L", "l", "2016-01-01")};
  std::vector<Transaction> txns{transfer("L", "C", 5000, "2017-01-02T00:00:00")};
  auto bins = weekly_bins(txns, accounts, kStart);
  EXPECT_TRUE(detect_layered(bins, txns, {"C"}).flagged.empty());
}

TEST(Layered, EmptyCriminalSetWarns) {
  auto r = detect_layered({}, {}, {});
  EXPECT_TRUE(r.flagged.empty());
  EXPECT_EQ(r.status, "warning");
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Score, Definitions) {
  std::set<std::string> truth{"a", "b"};
  std::vector<std::string> same{"a", "b"};
  Metrics m = score(same, truth);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);

  std::vector<std::string> disjoint{"c"};
  m = score(disjoint, truth);
  EXPECT_DOUBLE_EQ(m.precision, 0.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.0);

  std::set<std::string> twelve;
  std::vector<std::string> ten;
  for (int i = 0; i < 12; ++i) twelve.insert("t" + std::to_string(i));
  for (int i = 0; i < 9; ++i) ten.push_back("t" + std::to_string(i));
  ten.push_back("f");
  m = score(ten, twelve);
  EXPECT_DOUBLE_EQ(m.precision, 0.9);
  EXPECT_DOUBLE_EQ(m.recall, 0.75);
  EXPECT_EQ(m.true_positives, 9u);
}

TEST(Score, EmptySets) {
  std::vector<std::string> none;
  EXPECT_DOUBLE_EQ(score(none, {}).precision, 1.0);
  EXPECT_DOUBLE_EQ(score(none, {}).recall, 1.0);
  EXPECT_DOUBLE_EQ(score(none, {"a"}).precision, 0.0);
  EXPECT_DOUBLE_EQ(score(none, {"a"}).recall, 0.0);
}

TEST(Report, JsonRoundTrip) {
  DetectionReport r;
  r.detector = "layered_network";
  r.params = {{"ratio", 0.2}};
  r.flagged = {"a", "b"};
  r.metrics = Metrics{0.5, 1.0, 1, 2, 1};
  auto back = DetectionReport::from_json(r.to_json());
  EXPECT_EQ(back.flagged, r.flagged);
  EXPECT_EQ(back.params, r.params);
  ASSERT_TRUE(back.metrics);
  EXPECT_DOUBLE_EQ(back.metrics->precision, 0.5);
  EXPECT_EQ(r.to_json()["flagged_count"], 2);
}

// Naive re-implementations used as oracles on a generated corpus.
std::set<std::string> naive_collecting(const synth::BankCorpus& corpus,
                                       const std::vector<RiskFlag>& risk) {
  std::set<std::string> out;
  for (const Account& a : corpus.accounts) {
    if (!a.close_date || whole_months_between(a.open_date, *a.close_date) > 8) continue;
    std::set<std::string> senders;
    for (const Transaction& t : corpus.transactions) {
      if (t.dst_account != a.account_id) continue;
      for (const Account& s : corpus.accounts) {
        if (s.account_id != t.src_account) continue;
        for (const RiskFlag& r : risk) {
          if (r.fincrime_risk_exit && r.bank_id == s.bank_id && r.customer_id == s.customer_id) {
            senders.insert(s.account_id);
          }
        }
      }
    }
    if (senders.size() >= 3) out.insert(a.account_id);
  }
  return out;
}

std::set<std::string> naive_layered(const synth::BankCorpus& corpus,
                                    const std::set<std::string>& criminal) {
  std::set<std::string> candidates;
  for (const Transaction& t : corpus.transactions) {
    if (criminal.count(t.src_account) && !criminal.count(t.dst_account)) candidates.insert(t.dst_account);
    if (criminal.count(t.dst_account) && !criminal.count(t.src_account)) candidates.insert(t.src_account);
  }
  Timestamp origin{corpus.config.start};
  auto week_of = [&](const Transaction& t) {
    return long(duration_cast<days>(t.timestamp - origin).count() / 7);
  };
  std::set<std::string> out;
  for (const auto& id : candidates) {
    std::set<long> weeks;
    for (const Transaction& t : corpus.transactions) {
      if (t.dst_account == id) weeks.insert(week_of(t));
    }
    bool ok = !weeks.empty();
    for (long w : weeks) {
      std::int64_t balance = 0, inbound = 0;
      for (const Transaction& t : corpus.transactions) {
        long tw = week_of(t);
        if (tw > w) continue;
        if (t.dst_account == id) {
          balance += t.amount.cents;
          if (tw == w) inbound += t.amount.cents;
        }
        if (t.src_account == id) balance -= t.amount.cents;
      }
      if (double(balance) > 0.2 * double(inbound)) ok = false;
    }
    if (ok) out.insert(id);
  }
  return out;
}

class PlantedCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    auto config = synth::CorpusConfig::scaled(0.002, 17);
    config.planted_collecting = 10;
    config.planted_layered = 12;
    auto [c, t] = synth::generate_corpus(config);
    corpus_ = new synth::BankCorpus(std::move(c));
    truth_ = new synth::GroundTruth(std::move(t));
    risk_ = new std::vector<RiskFlag>(risk_flags_from_table(corpus_->risk_table()));
  }
  static void TearDownTestSuite() {
    delete corpus_;
    delete truth_;
    delete risk_;
  }
  static synth::BankCorpus* corpus_;
  static synth::GroundTruth* truth_;
  static std::vector<RiskFlag>* risk_;
};

synth::BankCorpus* PlantedCorpus::corpus_ = nullptr;
synth::GroundTruth* PlantedCorpus::truth_ = nullptr;
std::vector<RiskFlag>* PlantedCorpus::risk_ = nullptr;

TEST_F(PlantedCorpus, CollectingMatchesNaiveScan) {
  ASSERT_LE(corpus_->accounts.size(), 5000u);
  auto r = detect_collecting(corpus_->accounts, *risk_, corpus_->transactions);
  EXPECT_EQ(as_set(r.flagged), naive_collecting(*corpus_, *risk_));
  EXPECT_GE(score(r.flagged, truth_->collecting_accounts).recall, 0.9);
}

TEST_F(PlantedCorpus, LayeredMatchesNaiveScan) {
  auto bins = weekly_bins(corpus_->transactions, corpus_->accounts, corpus_->config.start);
  auto r = detect_layered(bins, corpus_->transactions, truth_->collecting_accounts);
  EXPECT_EQ(as_set(r.flagged), naive_layered(*corpus_, truth_->collecting_accounts));
  EXPECT_GE(score(r.flagged, truth_->layered_accounts).recall, 0.9);
}

TEST_F(PlantedCorpus, WeeklyBinsConserveMoney) {
  auto bins = weekly_bins(corpus_->transactions, corpus_->accounts, corpus_->config.start);
  std::int64_t in = 0, out = 0;
  std::map<std::string, std::int64_t> per_account_in;
  for (const auto& b : bins) {
    EXPECT_GE(b.inbound_sum.cents, 0);
    EXPECT_GE(b.outbound_sum.cents, 0);
    EXPECT_GE(b.week_index, 0);
    in += b.inbound_sum.cents;
    out += b.outbound_sum.cents;
    per_account_in[b.account_id] += b.inbound_sum.cents;
  }
  EXPECT_EQ(in - out, 0);
  std::map<std::string, std::int64_t> oracle;
  for (const auto& t : corpus_->transactions) oracle[t.dst_account] += t.amount.cents;
  for (const auto& [id, sum] : oracle) EXPECT_EQ(per_account_in[id], sum) << id;
}

TEST_F(PlantedCorpus, OrderIndependent) {
  auto accounts = corpus_->accounts;
  auto txns = corpus_->transactions;
  auto risk = *risk_;
  Rng rng(99);
  rng.shuffle(std::span(accounts));
  rng.shuffle(std::span(txns));
  rng.shuffle(std::span(risk));
  auto a = detect_collecting(corpus_->accounts, *risk_, corpus_->transactions);
  auto b = detect_collecting(accounts, risk, txns);
  EXPECT_EQ(a.flagged, b.flagged);

  auto bins_a = weekly_bins(corpus_->transactions, corpus_->accounts, corpus_->config.start);
  auto bins_b = weekly_bins(txns, accounts, corpus_->config.start);
  EXPECT_EQ(bins_a, bins_b);
  auto criminal = as_set(a.flagged);
  EXPECT_EQ(detect_layered(bins_a, corpus_->transactions, criminal).flagged,
            detect_layered(bins_b, txns, criminal).flagged);
}

TEST(PlantedScale, RecallAtOnePercentScale) {
  auto [corpus, truth] = synth::generate_corpus(synth::CorpusConfig::scaled(0.01, 7));
  auto risk = risk_flags_from_table(corpus.risk_table());
  auto collecting = detect_collecting(corpus.accounts, risk, corpus.transactions);
  EXPECT_GE(score(collecting.flagged, truth.collecting_accounts).recall, 0.9);
  auto bins = weekly_bins(corpus.transactions, corpus.accounts, corpus.config.start);
  auto layered = detect_layered(bins, corpus.transactions, as_set(collecting.flagged));
  EXPECT_GE(score(layered.flagged, truth.layered_accounts).recall, 0.9);
}

}  // namespace
}  // namespace amlwb::detect
