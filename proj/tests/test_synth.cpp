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
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <gtest/gtest.h>

#include "amlwb/date.hpp"
#include "amlwb/error.hpp"
#include "amlwb/synth.hpp"
#include "support/test_util.hpp"

namespace amlwb::synth {
namespace {

using namespace std::chrono;

class SynthCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    auto [c, t] = generate_corpus(CorpusConfig::scaled(0.01, 7));
    corpus_ = new BankCorpus(std::move(c));
    truth_ = new GroundTruth(std::move(t));
  }
  static void TearDownTestSuite() {
    delete corpus_;
    delete truth_;
  }
  static const BankCorpus& corpus() { return *corpus_; }
  static const GroundTruth& truth() { return *truth_; }

 private:
  static BankCorpus* corpus_;
  static GroundTruth* truth_;
};

BankCorpus* SynthCorpus::corpus_ = nullptr;
GroundTruth* SynthCorpus::truth_ = nullptr;

TEST(CorpusConfig, ScaledBankCounts) {
  CorpusConfig c = CorpusConfig::scaled(0.01, 1);
  ASSERT_EQ(c.banks.size(), 6u);
  std::vector<std::size_t> counts;
  for (const auto& b : c.banks) counts.push_back(b.account_count);
  EXPECT_EQ(counts, (std::vector<std::size_t>{2730, 1770, 1540, 1470, 950, 740}));
  EXPECT_EQ(c.total_accounts(), 9200u);

  CorpusConfig tiny = CorpusConfig::scaled(1e-9, 1);
  for (const auto& b : tiny.banks) EXPECT_EQ(b.account_count, 1u);
}

TEST(CorpusConfig, ValidateRejectsBadFields) {
  auto base = CorpusConfig::scaled(0.01, 1);
  EXPECT_NO_THROW(base.validate());

  auto expect_bad = [&](auto mutate, const char* what) {
    CorpusConfig c = base;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError) << what;
  };
  expect_bad([](CorpusConfig& c) { c.banks.clear(); }, "no banks");
  expect_bad([](CorpusConfig& c) { c.banks[0].account_count = 0; }, "empty bank");
  expect_bad([](CorpusConfig& c) { c.banks[1].bank_id = c.banks[0].bank_id; }, "dup");
  expect_bad([](CorpusConfig& c) { c.fraction_companies = 1.5; }, "fraction");
  expect_bad([](CorpusConfig& c) { c.months = 0; }, "months");
  expect_bad([](CorpusConfig& c) { c.collecting_window_months = 0; }, "window");
  expect_bad([](CorpusConfig& c) { c.accounts_per_identity = 0.5; }, "api");
  expect_bad([](CorpusConfig& c) { c.background_rate = -1; }, "rate");
  expect_bad([](CorpusConfig& c) { c.nationality_mix.clear(); }, "mix");
  expect_bad([](CorpusConfig& c) { c.planted_collecting = 100000; }, "planted");
}

TEST(CorpusConfig, JsonRoundTrip) {
  CorpusConfig c = CorpusConfig::scaled(0.02, 99);
  c.noise = true;
  c.planted_layered = 4;
  nlohmann::json j = c;
  CorpusConfig back = j.get<CorpusConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_TRUE(back.noise);
}

TEST(Generate, SameSeedGivesIdenticalFiles) {
  testing::TempDir a, b;
  auto config = CorpusConfig::scaled(0.002, 11);
  auto [c1, t1] = generate_corpus(config);
  auto [c2, t2] = generate_corpus(config);
  write_corpus(a.path(), c1, t1);
  write_corpus(b.path(), c2, t2);
  auto ta = testing::tree_contents(a.path());
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, testing::tree_contents(b.path()));
}

TEST(Generate, DifferentSeedsDiffer) {
  auto [c1, t1] = generate_corpus(CorpusConfig::scaled(0.002, 1));
  auto [c2, t2] = generate_corpus(CorpusConfig::scaled(0.002, 2));
  EXPECT_NE(c1.transactions_table().rows, c2.transactions_table().rows);
}

TEST(Generate, NoPlantingGivesEmptyPlantedTruth) {
  auto config = CorpusConfig::scaled(0.002, 3);
  config.planted_collecting = 0;
  config.planted_layered = 0;
  auto [corpus, truth] = generate_corpus(config);
  EXPECT_TRUE(truth.collecting_accounts.empty());
  EXPECT_TRUE(truth.layered_accounts.empty());
  EXPECT_FALSE(corpus.transactions.empty());
}

TEST(Generate, LayeredWithoutCollectorsIsConfigError) {
  auto config = CorpusConfig::scaled(0.002, 3);
  config.planted_collecting = 0;
  config.planted_layered = 2;
  EXPECT_THROW(generate_corpus(config), ConfigError);
}

TEST_F(SynthCorpus, PlantedCountsAndDisjointTruth) {
  EXPECT_EQ(truth().collecting_accounts.size(), 20u);
  EXPECT_EQ(truth().layered_accounts.size(), 30u);
  for (const auto& a : truth().layered_accounts) {
    EXPECT_FALSE(truth().collecting_accounts.count(a)) << a;
  }
}

TEST_F(SynthCorpus, AccountIdsUniqueAndTablesReferentiallyIntact) {
  std::unordered_set<std::string> accounts, customers;
  for (const auto& a : corpus().accounts) {
    EXPECT_TRUE(accounts.insert(a.account_id).second) << a.account_id;
    customers.insert(a.bank_id + "/" + a.customer_id);
  }
  for (const auto& t : corpus().transactions) {
    ASSERT_TRUE(accounts.count(t.src_account)) << t.txn_id;
    ASSERT_TRUE(accounts.count(t.dst_account)) << t.txn_id;
    EXPECT_NE(t.src_account, t.dst_account);
    EXPECT_GT(t.amount.cents, 0);
  }
  std::set<std::pair<std::string, std::string>> parties;
  for (const auto& p : corpus().parties) {
    EXPECT_TRUE(parties.insert({p.bank_id, p.related_party_id}).second);
  }
  for (const auto& l : corpus().links) {
    EXPECT_TRUE(customers.count(l.bank_id + "/" + l.customer_id));
    EXPECT_TRUE(parties.count({l.bank_id, l.related_party_id}));
  }
}

TEST_F(SynthCorpus, TransactionsFallWithinAccountLifetimes) {
  std::unordered_map<std::string, const Account*> by_id;
  for (const auto& a : corpus().accounts) by_id[a.account_id] = &a;
  Timestamp end{corpus().config.end()};
  for (const auto& t : corpus().transactions) {
    EXPECT_GE(t.timestamp, Timestamp{corpus().config.start});
    EXPECT_LT(t.timestamp, end);
    for (const auto* id : {&t.src_account, &t.dst_account}) {
      const Account* a = by_id.at(*id);
      EXPECT_GE(t.timestamp, Timestamp{a->open_date}) << *id;
      if (a->close_date) EXPECT_LT(t.timestamp, Timestamp{*a->close_date} + days{1});
    }
  }
}

TEST_F(SynthCorpus, RiskHasOneRowPerCustomer) {
  Table customers = corpus().customers_table();
  Table risk = corpus().risk_table();
  ASSERT_EQ(risk.rows.size(), customers.rows.size());
  std::size_t cid = customers.column("customer_id");
  std::size_t rid = risk.column("customer_id");
  std::set<std::string> a, b;
  for (const auto& r : customers.rows) a.insert(*r[cid]);
  for (const auto& r : risk.rows) b.insert(*r[rid]);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), customers.rows.size());
}

TEST_F(SynthCorpus, CustomerIdentifiersExactlyOne) {
  Table customers = corpus().customers_table();
  std::size_t doc = customers.column("id_doc_number");
  std::size_t reg = customers.column("company_registration_id");
  std::size_t type = customers.column("customer_type");
  std::size_t companies = 0;
  for (const auto& r : customers.rows) {
    EXPECT_NE(r[doc].has_value(), r[reg].has_value());
    if (*r[type] == "company") {
      ++companies;
      EXPECT_TRUE(r[reg].has_value());
    }
  }
  double share = double(companies) / double(customers.rows.size());
  EXPECT_NEAR(share, 0.10, 0.03);
}

TEST_F(SynthCorpus, PartiesAreIndividuals) {
  Table parties = corpus().parties_table();
  std::size_t doc = parties.column("id_doc_number");
  std::size_t reg = parties.column("company_registration_id");
  for (const auto& r : parties.rows) {
    EXPECT_TRUE(r[doc].has_value() && !r[doc]->empty());
    EXPECT_FALSE(r[reg].has_value());
  }
  for (const auto& p : corpus().parties) {
    EXPECT_FALSE(corpus().identities[p.identity].company);
  }
}

TEST_F(SynthCorpus, AccountsPerIdentityNearTarget) {
  std::set<std::size_t> holders;
  for (const auto& c : corpus().customers) holders.insert(c.identity);
  double ratio = double(corpus().customers.size()) / double(holders.size());
  EXPECT_NEAR(ratio, 4.6, 0.5);
}

TEST_F(SynthCorpus, LinkCountAndDurationBounded) {
  std::map<std::pair<std::string, std::size_t>, int> per_entity;
  std::unordered_map<std::string, std::size_t> identity_of;
  for (const auto& c : corpus().customers) identity_of[c.bank_id + "/" + c.customer_id] = c.identity;
  Date end = corpus().config.end();
  for (const auto& l : corpus().links) {
    ++per_entity[{l.bank_id, identity_of.at(l.bank_id + "/" + l.customer_id)}];
    Date stop = l.end.value_or(end);
    EXPECT_LE(l.start, stop);
    EXPECT_LE(whole_months_between(l.start, stop), 600);
  }
  for (const auto& [key, n] : per_entity) EXPECT_LE(n, 32) << key.first;
}

TEST_F(SynthCorpus, CollectorsAreShortLivedWithBannedSenders) {
  std::unordered_map<std::string, const Account*> by_id;
  for (const auto& a : corpus().accounts) by_id[a.account_id] = &a;
  std::unordered_map<std::string, bool> banned_customer;
  for (const auto& c : corpus().customers) {
    banned_customer[c.bank_id + "/" + c.customer_id] =
        corpus().identities[c.identity].banned;
  }
  std::map<std::string, std::set<std::string>> banned_senders;
  for (const auto& t : corpus().transactions) {
    const Account* src = by_id.at(t.src_account);
    if (banned_customer.at(src->bank_id + "/" + src->customer_id)) {
      banned_senders[t.dst_account].insert(t.src_account);
    }
  }
  int window = corpus().config.collecting_window_months;
  for (const auto& id : truth().collecting_accounts) {
    const Account* a = by_id.at(id);
    ASSERT_TRUE(a->close_date) << id;
    EXPECT_LE(whole_months_between(a->open_date, *a->close_date), window) << id;
    EXPECT_GE(banned_senders[id].size(), 3u) << id;
    EXPECT_TRUE(banned_customer.at(a->bank_id + "/" + a->customer_id)) << id;
  }
}

// Weekly ledger recomputed here from raw transfers: 7-day bins from the
// corpus start, running balance from zero.
TEST_F(SynthCorpus, LayeredAccountsPassMoneyThrough) {
  const auto& cfg = corpus().config;
  std::map<std::string, std::map<long, std::pair<std::int64_t, std::int64_t>>> weeks;
  std::set<std::string> touches_collector;
  Timestamp origin{cfg.start};
  for (const auto& t : corpus().transactions) {
    long week = long(duration_cast<days>(t.timestamp - origin).count() / 7);
    if (truth().layered_accounts.count(t.dst_account)) {
      weeks[t.dst_account][week].first += t.amount.cents;
      if (truth().collecting_accounts.count(t.src_account)) touches_collector.insert(t.dst_account);
    }
    if (truth().layered_accounts.count(t.src_account)) {
      weeks[t.src_account][week].second += t.amount.cents;
      if (truth().collecting_accounts.count(t.dst_account)) touches_collector.insert(t.src_account);
    }
  }
  for (const auto& id : truth().layered_accounts) {
    EXPECT_TRUE(touches_collector.count(id)) << id;
    std::int64_t balance = 0;
    bool any_inbound = false;
    for (const auto& [week, flow] : weeks[id]) {
      balance += flow.first - flow.second;
      if (flow.first > 0) {
        any_inbound = true;
        EXPECT_LE(double(balance), cfg.passthrough_ratio * double(flow.first))
            << id << " week " << week;
      }
    }
    EXPECT_TRUE(any_inbound) << id;
  }
}

TEST_F(SynthCorpus, BannedEntitiesMatchIdentities) {
  std::set<std::string> banned;
  for (const auto& id : corpus().identities) {
    if (id.banned) banned.insert(id.doc_id());
  }
  EXPECT_EQ(banned, truth().banned_entities);
}

TEST_F(SynthCorpus, WriteAndReadBack) {
  testing::TempDir dir;
  CorpusFiles files = write_corpus(dir.path(), corpus(), truth());
  for (const auto& f : files.files) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  GroundTruth back = read_ground_truth(dir.path());
  EXPECT_EQ(back.collecting_accounts, truth().collecting_accounts);
  EXPECT_EQ(back.layered_accounts, truth().layered_accounts);
  EXPECT_EQ(back.banned_entities, truth().banned_entities);
  Table accounts = read_corpus_table(dir.path(), "ACCOUNTS");
  EXPECT_EQ(accounts.rows.size(), corpus().accounts.size());
  Table txns = read_corpus_table(dir.path(), "TRANSACTIONS");
  EXPECT_EQ(txns.rows.size(), corpus().transactions.size());
}

}  // namespace
}  // namespace amlwb::synth
