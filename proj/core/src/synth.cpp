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

#include "amlwb/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "amlwb/error.hpp"

namespace amlwb::synth {

using namespace std::chrono;

namespace {

constexpr std::size_t kTable1Accounts[] = {273000, 177000, 154000,
                                          147000, 95000,  74000};
constexpr int kMaxPartyLinks = 32;
constexpr int kMaxRelationMonths = 600;
constexpr double kFemaleShare = 396.0 / (396.0 + 316.0);
constexpr const char* kRelationTypes[] = {"family", "business", "associate",
                                          "guarantor"};
// Community 0 holds banned identities and their associates.
constexpr int kRingCommunity = 0;

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, value);
  return buf;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

Timestamp random_time(Rng& rng, Timestamp from, Timestamp to) {
  auto span = (to - from).count();
  if (span <= 0) return from;
  return from + seconds{static_cast<std::int64_t>(
                    rng.below(static_cast<std::uint64_t>(span)))};
}

bool active_over(const Account& a, Date from, Date to) {
  return a.open_date <= from && (!a.close_date || *a.close_date >= to);
}

bool active_at(const Account& a, Timestamp t) {
  return Timestamp{a.open_date} <= t &&
         (!a.close_date || t < Timestamp{*a.close_date});
}

Money lognormal_cents(Rng& rng, double median_cents, double sigma) {
  double v = std::round(rng.lognormal(std::log(median_cents), sigma));
  return Money{std::max<std::int64_t>(1, static_cast<std::int64_t>(v))};
}

void renumber_transactions(BankCorpus& c) {
  std::stable_sort(c.transactions.begin(), c.transactions.end(),
                   [](const Transaction& a, const Transaction& b) {
                     return std::tie(a.timestamp, a.src_account, a.dst_account,
                                     a.amount) <
                            std::tie(b.timestamp, b.src_account, b.dst_account,
                                     b.amount);
                   });
  for (std::size_t i = 0; i < c.transactions.size(); ++i) {
    c.transactions[i].txn_id = padded("T", i + 1, 8);
  }
}

void remove_transactions_touching(BankCorpus& c, const std::string& account) {
  std::erase_if(c.transactions, [&](const Transaction& t) {
    return t.src_account == account || t.dst_account == account;
  });
}

std::size_t account_index(const BankCorpus& c, const std::string& id) {
  for (std::size_t i = 0; i < c.accounts.size(); ++i) {
    if (c.accounts[i].account_id == id) return i;
  }
  throw ConfigError("unknown account " + id);
}

std::string pick_nationality(const CorpusConfig& cfg, Rng& rng) {
  double total = 0.0;
  for (const auto& n : cfg.nationality_mix) total += n.weight;
  double x = rng.uniform() * total;
  for (const auto& n : cfg.nationality_mix) {
    if (x < n.weight) return n.code;
    x -= n.weight;
  }
  return cfg.nationality_mix.back().code;
}

void build_population(BankCorpus& c, Rng& rng) {
  const CorpusConfig& cfg = c.config;
  std::size_t total = cfg.total_accounts();
  std::size_t n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(
             static_cast<double>(total) / cfg.accounts_per_identity)));
  int communities = static_cast<int>(std::max<std::size_t>(2, n / 40));
  c.identities.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Identity id;
    id.company = rng.bernoulli(cfg.fraction_companies);
    if (id.company) {
      id.company_registration_id =
          padded("C", 1000000 + i * 3 + rng.below(3), 7);
    } else {
      id.id_doc_number = padded("P", 10000000 + i * 7 + rng.below(7), 8);
      id.gender = rng.bernoulli(kFemaleShare) ? "female" : "male";
    }
    id.nationality = pick_nationality(cfg, rng);
    id.birth_year = static_cast<int>(rng.between(1940, 2000));
    id.community = static_cast<int>(rng.below(communities));
    c.identities.push_back(std::move(id));
  }
}

void build_accounts(BankCorpus& c, Rng& rng) {
  const CorpusConfig& cfg = c.config;
  const std::size_t total = cfg.total_accounts();
  const Date start = cfg.start;
  const Date end = cfg.end();
  const auto span_days = (end - start).count();

  // Each identity holds 1 + Poisson(mean - 1) customer records; the slot list
  // is then trimmed or padded to the configured account total.
  std::vector<std::size_t> slots;
  slots.reserve(total + 16);
  for (std::size_t i = 0; i < c.identities.size(); ++i) {
    std::uint64_t k = 1 + rng.poisson(cfg.accounts_per_identity - 1.0);
    for (std::uint64_t j = 0; j < k; ++j) slots.push_back(i);
  }
  while (slots.size() < total) slots.push_back(rng.below(c.identities.size()));
  rng.shuffle(std::span(slots));
  slots.resize(total);

  std::size_t next = 0;
  for (const BankSpec& bank : cfg.banks) {
    for (std::size_t j = 0; j < bank.account_count; ++j) {
      std::size_t ident = slots[next++];
      Customer cust;
      cust.bank_id = bank.bank_id;
      cust.customer_id = "B" + bank.bank_id + "-" + padded("C", j + 1, 6);
      cust.identity = ident;
      cust.black_list_draw = rng.uniform();
      cust.aml_draw = rng.uniform();
      cust.risk_score = static_cast<int>(rng.between(0, 40));
      if (cfg.noise && !c.identities[ident].company && rng.bernoulli(0.05)) {
        std::string noisy = c.identities[ident].id_doc_number;
        if (rng.bernoulli(0.5)) {
          for (char& ch : noisy) ch = static_cast<char>(std::tolower(ch));
        } else {
          noisy = " " + noisy + " ";
        }
        cust.doc_number_override = std::move(noisy);
      }

      Account acct;
      acct.account_id = "B" + bank.bank_id + "-" + padded("A", j + 1, 6);
      acct.customer_id = cust.customer_id;
      acct.bank_id = bank.bank_id;
      if (rng.bernoulli(0.15)) {
        acct.open_date = start + days{rng.below(std::max<std::int64_t>(1, span_days - 60))};
      } else {
        acct.open_date = start - days{1 + rng.below(3650)};
      }
      if (rng.bernoulli(0.10)) {
        Date earliest = std::max(acct.open_date + days{300}, start + days{30});
        if (earliest < end) {
          acct.close_date =
              earliest + days{rng.below(std::max<std::int64_t>(
                             1, (end - earliest).count()))};
        }
      }
      c.customers.push_back(std::move(cust));
      c.accounts.push_back(std::move(acct));
    }
  }
}

void ban_identity(BankCorpus& c, std::size_t identity, GroundTruth& delta) {
  Identity& id = c.identities[identity];
  if (id.banned) return;
  id.banned = true;
  id.community = kRingCommunity;
  delta.banned_entities.insert(id.doc_id());
}

GroundTruth sample_banned(BankCorpus& c, Rng& rng) {
  GroundTruth delta;
  auto target = static_cast<std::size_t>(std::llround(
      c.config.banned_fraction * static_cast<double>(c.customers.size())));
  std::vector<std::size_t> rows_per_identity(c.identities.size(), 0);
  for (const Customer& cust : c.customers) ++rows_per_identity[cust.identity];
  std::vector<std::size_t> order(c.identities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span(order));
  std::size_t banned_rows = 0;
  for (std::size_t i : order) {
    if (banned_rows >= target) break;
    if (c.identities[i].company || rows_per_identity[i] == 0) continue;
    ban_identity(c, i, delta);
    banned_rows += rows_per_identity[i];
  }
  return delta;
}

void generate_background(BankCorpus& c, Rng& rng) {
  const CorpusConfig& cfg = c.config;
  const Timestamp start{cfg.start};
  const Timestamp end{cfg.end()};
  const std::size_t n = c.accounts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Account& a = c.accounts[i];
    Timestamp from = std::max(start, Timestamp{a.open_date});
    Timestamp to = a.close_date ? std::min(end, Timestamp{*a.close_date}) : end;
    if (to <= from) continue;
    double months_active =
        duration<double>(to - from).count() / (86400.0 * 30.436875);
    std::uint64_t count = rng.poisson(cfg.background_rate * months_active);
    for (std::uint64_t k = 0; k < count; ++k) {
      Timestamp ts = random_time(rng, from, to);
      Money amount = lognormal_cents(rng, 8000.0, 1.0);
      for (int attempt = 0; attempt < 20; ++attempt) {
        std::size_t j = rng.below(n);
        if (j == i || !active_at(c.accounts[j], ts)) continue;
        c.transactions.push_back(
            Transaction{"", a.account_id, c.accounts[j].account_id, amount, ts});
        break;
      }
    }
  }
}

void build_relations(BankCorpus& c, Rng& rng) {
  const CorpusConfig& cfg = c.config;
  const Date end = cfg.end();
  const Date earliest = add_months(end, -kMaxRelationMonths);
  const auto relation_days = (end - earliest).count();

  std::map<int, std::vector<std::size_t>> pools;
  std::vector<std::size_t> individuals;
  for (std::size_t i = 0; i < c.identities.size(); ++i) {
    if (c.identities[i].company || !rng.bernoulli(cfg.party_fraction)) continue;
    individuals.push_back(i);
    pools[c.identities[i].community].push_back(i);
  }
  if (individuals.empty()) return;

  std::vector<int> party_links(c.identities.size(), 0);
  std::map<std::pair<std::string, std::size_t>, int> customer_links;
  std::map<std::pair<std::string, std::size_t>, std::string> party_ids;
  std::map<std::string, std::size_t> party_counter;
  std::set<std::tuple<std::string, std::string, std::size_t>> linked;

  for (const Customer& cust : c.customers) {
    const Identity& owner = c.identities[cust.identity];
    std::uint64_t n_links =
        owner.banned ? static_cast<std::uint64_t>(rng.between(8, 20))
                     : std::min<std::uint64_t>(rng.poisson(cfg.mean_links),
                                               kMaxPartyLinks);
    const auto& home = pools.count(owner.community)
                           ? pools[owner.community]
                           : individuals;
    const double stay_home = owner.banned ? 0.85 : 0.8;
    int& entity_links = customer_links[{cust.bank_id, cust.identity}];
    for (std::uint64_t k = 0; k < n_links && entity_links < kMaxPartyLinks;
         ++k) {
      for (int attempt = 0; attempt < 8; ++attempt) {
        const auto& pool = rng.bernoulli(stay_home) ? home : individuals;
        std::size_t party = pool[rng.below(pool.size())];
        if (party == cust.identity || party_links[party] >= kMaxPartyLinks) {
          continue;
        }
        auto key = std::make_tuple(cust.bank_id, cust.customer_id, party);
        if (linked.count(key)) continue;
        linked.insert(key);
        ++party_links[party];
        ++entity_links;

        auto& rp = party_ids[{cust.bank_id, party}];
        if (rp.empty()) {
          rp = "B" + cust.bank_id + "-" +
               padded("R", ++party_counter[cust.bank_id], 6);
          c.parties.push_back(Party{cust.bank_id, rp, cust.customer_id, party});
        }
        Link link;
        link.bank_id = cust.bank_id;
        link.customer_id = cust.customer_id;
        link.related_party_id = rp;
        link.relation_type = kRelationTypes[rng.below(4)];
        link.start = earliest + days{rng.below(relation_days)};
        if (rng.bernoulli(0.25)) {
          link.end = link.start +
                     days{rng.below(std::max<std::int64_t>(
                         1, (end - link.start).count()))};
        }
        c.links.push_back(std::move(link));
        break;
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

CorpusConfig CorpusConfig::scaled(double scale, std::uint64_t seed) {
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  CorpusConfig c;
  c.seed = seed;
  for (std::size_t i = 0; i < std::size(kTable1Accounts); ++i) {
    auto n = static_cast<std::size_t>(
        std::llround(static_cast<double>(kTable1Accounts[i]) * scale));
    c.banks.push_back(BankSpec{std::to_string(i + 1), std::max<std::size_t>(1, n)});
  }
  return c;
}

std::size_t CorpusConfig::total_accounts() const {
  std::size_t total = 0;
  for (const auto& b : banks) total += b.account_count;
  return total;
}

void CorpusConfig::validate() const {
  if (banks.empty()) throw ConfigError("at least one bank is required");
  std::set<std::string> ids;
  for (const auto& b : banks) {
    if (b.account_count == 0) {
      throw ConfigError("bank " + b.bank_id + " has no accounts");
    }
    if (b.bank_id.empty() || !ids.insert(b.bank_id).second) {
      throw ConfigError("bank ids must be unique and nonempty");
    }
  }
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(fraction_companies) || !in_unit(banned_fraction) ||
      !in_unit(passthrough_ratio) || !in_unit(party_fraction)) {
    throw ConfigError("fractions must lie in [0, 1]");
  }
  if (months < 1) throw ConfigError("months must be >= 1");
  if (collecting_window_months < 1) {
    throw ConfigError("collecting window must be >= 1 month");
  }
  if (accounts_per_identity < 1.0) {
    throw ConfigError("accounts_per_identity must be >= 1");
  }
  if (background_rate < 0.0 || mean_links < 0.0) {
    throw ConfigError("rates must be nonnegative");
  }
  if (nationality_mix.empty()) throw ConfigError("nationality mix is empty");
  double weight = 0.0;
  for (const auto& n : nationality_mix) {
    if (n.weight < 0.0) throw ConfigError("negative nationality weight");
    weight += n.weight;
  }
  if (!(weight > 0.0)) throw ConfigError("nationality weights sum to zero");
  std::size_t total = total_accounts();
  if (planted_collecting + planted_layered > total) {
    throw ConfigError("planted accounts (" +
                      std::to_string(planted_collecting + planted_layered) +
                      ") exceed available accounts (" + std::to_string(total) +
                      ")");
  }
}

void to_json(nlohmann::json& j, const CorpusConfig& c) {
  j = nlohmann::json::object();
  auto& banks = j["banks"] = nlohmann::json::array();
  for (const auto& b : c.banks) {
    banks.push_back({{"bank_id", b.bank_id}, {"account_count", b.account_count}});
  }
  j["start"] = format_date(c.start);
  j["months"] = c.months;
  j["fraction_companies"] = c.fraction_companies;
  auto& mix = j["nationality_mix"] = nlohmann::json::array();
  for (const auto& n : c.nationality_mix) {
    mix.push_back({{"code", n.code}, {"weight", n.weight}});
  }
  j["accounts_per_identity"] = c.accounts_per_identity;
  j["banned_fraction"] = c.banned_fraction;
  j["planted_collecting"] = c.planted_collecting;
  j["planted_layered"] = c.planted_layered;
  j["collecting_window_months"] = c.collecting_window_months;
  j["passthrough_ratio"] = c.passthrough_ratio;
  j["background_rate"] = c.background_rate;
  j["mean_links"] = c.mean_links;
  j["party_fraction"] = c.party_fraction;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
}

void from_json(const nlohmann::json& j, CorpusConfig& c) {
  c = CorpusConfig{};
  for (const auto& b : j.at("banks")) {
    c.banks.push_back(BankSpec{b.at("bank_id").get<std::string>(),
                               b.at("account_count").get<std::size_t>()});
  }
  c.start = parse_date(j.at("start").get<std::string>());
  c.months = j.at("months").get<int>();
  c.fraction_companies = j.at("fraction_companies").get<double>();
  c.nationality_mix.clear();
  for (const auto& n : j.at("nationality_mix")) {
    c.nationality_mix.push_back(
        {n.at("code").get<std::string>(), n.at("weight").get<double>()});
  }
  c.accounts_per_identity = j.at("accounts_per_identity").get<double>();
  c.banned_fraction = j.at("banned_fraction").get<double>();
  c.planted_collecting = j.at("planted_collecting").get<std::size_t>();
  c.planted_layered = j.at("planted_layered").get<std::size_t>();
  c.collecting_window_months = j.at("collecting_window_months").get<int>();
  c.passthrough_ratio = j.at("passthrough_ratio").get<double>();
  c.background_rate = j.at("background_rate").get<double>();
  c.mean_links = j.at("mean_links").get<double>();
  c.party_fraction = j.at("party_fraction").get<double>();
  c.noise = j.at("noise").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

std::string Identity::doc_id() const {
  return company ? "company_" + company_registration_id
                 : "individual_" + id_doc_number;
}

void GroundTruth::merge(const GroundTruth& delta) {
  collecting_accounts.insert(delta.collecting_accounts.begin(),
                             delta.collecting_accounts.end());
  layered_accounts.insert(delta.layered_accounts.begin(),
                          delta.layered_accounts.end());
  banned_entities.insert(delta.banned_entities.begin(),
                         delta.banned_entities.end());
}

// ---------------------------------------------------------------------------
// Planting

GroundTruth plant_collecting_network(BankCorpus& c, std::size_t count,
                                     int window_months, Rng& rng,
                                     const GroundTruth& existing) {
  GroundTruth delta;
  if (count == 0) return delta;
  if (window_months < 1) throw ConfigError("window must be >= 1 month");

  const Date start = c.config.start;
  const Date end = c.config.end();
  const auto span_days = (end - start).count();

  auto taken = [&](const std::string& id) {
    return existing.collecting_accounts.count(id) ||
           existing.layered_accounts.count(id) ||
           delta.collecting_accounts.count(id);
  };

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < c.accounts.size(); ++i) {
    if (c.identities[c.customers[i].identity].banned) continue;
    if (taken(c.accounts[i].account_id)) continue;
    eligible.push_back(i);
  }
  if (eligible.size() < count) {
    throw ConfigError("only " + std::to_string(eligible.size()) +
                      " accounts eligible for " + std::to_string(count) +
                      " collecting networks");
  }
  rng.shuffle(std::span(eligible));
  eligible.resize(count);
  for (std::size_t idx : eligible) {
    delta.collecting_accounts.insert(c.accounts[idx].account_id);
  }

  for (std::size_t idx : eligible) {
    Account& collector = c.accounts[idx];
    int lo = std::min(2, window_months - 1);
    int months = static_cast<int>(rng.between(lo, window_months - 1));
    auto room = span_days - (months + 1) * 31 - 1;
    if (room < 1) throw ConfigError("corpus span too short for collecting window");
    collector.open_date = start + days{rng.below(room)};
    Date close = add_months(collector.open_date, months) +
                 days{rng.between(0, 20)};
    if (close >= end) close = end - days{1};
    collector.close_date = close;
    ban_identity(c, c.customers[idx].identity, delta);
    remove_transactions_touching(c, collector.account_id);

    auto collect_senders = [&] {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < c.accounts.size(); ++i) {
        if (i == idx) continue;
        if (!c.identities[c.customers[i].identity].banned) continue;
        const std::string& id = c.accounts[i].account_id;
        if (delta.collecting_accounts.count(id) ||
            existing.collecting_accounts.count(id) ||
            existing.layered_accounts.count(id)) {
          continue;
        }
        if (active_over(c.accounts[i], collector.open_date, close)) {
          out.push_back(i);
        }
      }
      return out;
    };
    std::vector<std::size_t> senders = collect_senders();
    // Too few criminal senders alive in the window: ban further individuals.
    for (int attempt = 0; senders.size() < 3 && attempt < 1000; ++attempt) {
      std::size_t cand = rng.below(c.accounts.size());
      if (cand == idx || taken(c.accounts[cand].account_id)) continue;
      const Identity& owner = c.identities[c.customers[cand].identity];
      if (owner.company || owner.banned) continue;
      if (!active_over(c.accounts[cand], collector.open_date, close)) continue;
      ban_identity(c, c.customers[cand].identity, delta);
      senders = collect_senders();
    }
    if (senders.size() < 3) {
      throw ConfigError("not enough banned sender accounts for collector " +
                        collector.account_id);
    }
    rng.shuffle(std::span(senders));
    senders.resize(static_cast<std::size_t>(
        rng.between(3, static_cast<std::int64_t>(std::min<std::size_t>(5, senders.size())))));
    for (std::size_t s : senders) {
      auto transfers = rng.between(1, 2);
      for (std::int64_t k = 0; k < transfers; ++k) {
        c.transactions.push_back(Transaction{
            "", c.accounts[s].account_id, collector.account_id,
            lognormal_cents(rng, 150000.0, 0.4),
            random_time(rng, Timestamp{collector.open_date}, Timestamp{close})});
      }
    }
  }
  renumber_transactions(c);
  return delta;
}

GroundTruth plant_layered_network(BankCorpus& c, std::size_t count,
                                  double passthrough_ratio, Rng& rng,
                                  const GroundTruth& existing) {
  GroundTruth delta;
  if (count == 0) return delta;
  if (existing.collecting_accounts.empty()) {
    throw ConfigError("layered planting needs criminal collector accounts");
  }
  if (!(passthrough_ratio > 0.0 && passthrough_ratio <= 1.0)) {
    throw ConfigError("passthrough ratio must lie in (0, 1]");
  }
  const Date start = c.config.start;
  const Date end = c.config.end();
  const Timestamp end_ts{end};
  const auto total_weeks = ((end - start).count() + 6) / 7;

  std::vector<std::size_t> eligible;
  std::vector<std::size_t> benign;
  for (std::size_t i = 0; i < c.accounts.size(); ++i) {
    const std::string& id = c.accounts[i].account_id;
    if (c.identities[c.customers[i].identity].banned) continue;
    if (existing.collecting_accounts.count(id) ||
        existing.layered_accounts.count(id)) {
      continue;
    }
    if (active_over(c.accounts[i], start, end)) eligible.push_back(i);
    benign.push_back(i);
  }
  if (eligible.size() < count) {
    throw ConfigError("only " + std::to_string(eligible.size()) +
                      " accounts eligible for " + std::to_string(count) +
                      " layered accounts");
  }
  rng.shuffle(std::span(eligible));
  eligible.resize(count);
  std::unordered_set<std::size_t> chosen(eligible.begin(), eligible.end());
  std::erase_if(benign, [&](std::size_t i) { return chosen.count(i) > 0; });
  if (benign.empty()) throw ConfigError("no counterparties for layered accounts");

  std::vector<std::string> collectors(existing.collecting_accounts.begin(),
                                      existing.collecting_accounts.end());

  auto counterparty_at = [&](Timestamp ts) -> const Account* {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const Account& a = c.accounts[benign[rng.below(benign.size())]];
      if (active_at(a, ts)) return &a;
    }
    return nullptr;
  };

  for (std::size_t n = 0; n < eligible.size(); ++n) {
    Account& layer = c.accounts[eligible[n]];
    delta.layered_accounts.insert(layer.account_id);
    remove_transactions_touching(c, layer.account_id);

    const Account& collector =
        c.accounts[account_index(c, collectors[n % collectors.size()])];
    Date open = std::max(collector.open_date, start);
    Date close = collector.close_date ? *collector.close_date : end;
    if (close <= open) {
      throw ConfigError("collector " + collector.account_id +
                        " has an empty activity window");
    }

    // First inbound: from the collector, early in a week so the forwarding
    // fits in the same weekly bin.
    Date first_day = open;
    for (int attempt = 0; attempt < 200; ++attempt) {
      Date d = open + days{rng.below((close - open).count())};
      if ((d - start).count() % 7 <= 4) {
        first_day = d;
        break;
      }
    }
    Timestamp first_in = Timestamp{first_day} + seconds{rng.below(12 * 3600)};
    auto first_week = (first_day - start).count() / 7;
    auto weeks = rng.between(3, 8);

    Money balance{0};
    for (std::int64_t w = first_week;
         w < std::min<std::int64_t>(first_week + weeks, total_weeks); ++w) {
      Timestamp week_start = Timestamp{start + days{7 * w}};
      Timestamp week_end = std::min(end_ts, week_start + days{7});
      Timestamp ts_in =
          w == first_week
              ? first_in
              : week_start + days{rng.below(3)} + seconds{rng.below(12 * 3600)};
      if (week_end - ts_in < hours{4}) break;
      Money inbound = lognormal_cents(rng, 300000.0, 0.5);
      std::string source = collector.account_id;
      if (w != first_week) {
        const Account* cp = counterparty_at(ts_in);
        if (!cp) break;
        source = cp->account_id;
      }
      c.transactions.push_back(
          Transaction{"", source, layer.account_id, inbound, ts_in});

      double r = rng.uniform(0.0, 0.75 * passthrough_ratio);
      Money keep{static_cast<std::int64_t>(
          std::floor(r * static_cast<double>(inbound.cents)))};
      Money outbound = balance + inbound - keep;
      auto parts = rng.between(1, 3);
      Money left = outbound;
      for (std::int64_t p = 0; p < parts && left.cents > 0; ++p) {
        Money piece = p + 1 == parts
                          ? left
                          : Money{std::max<std::int64_t>(
                                1, static_cast<std::int64_t>(
                                       left.cents * rng.uniform(0.3, 0.7)))};
        Timestamp ts_out = random_time(rng, ts_in + hours{1}, week_end);
        const Account* cp = counterparty_at(ts_out);
        if (!cp) {
          throw ConfigError("no active counterparty for layered transfer");
        }
        c.transactions.push_back(
            Transaction{"", layer.account_id, cp->account_id, piece, ts_out});
        left -= piece;
      }
      balance = keep;
    }
  }
  renumber_transactions(c);
  return delta;
}

// ---------------------------------------------------------------------------
// Generation

std::pair<BankCorpus, GroundTruth> generate_corpus(const CorpusConfig& config) {
  config.validate();
  BankCorpus c;
  c.config = config;
  Rng population = Rng::derive(config.seed, 1);
  Rng accounts = Rng::derive(config.seed, 2);
  Rng banned = Rng::derive(config.seed, 3);
  Rng background = Rng::derive(config.seed, 4);
  Rng collecting = Rng::derive(config.seed, 5);
  Rng layered = Rng::derive(config.seed, 6);
  Rng relations = Rng::derive(config.seed, 7);

  build_population(c, population);
  build_accounts(c, accounts);
  GroundTruth truth = sample_banned(c, banned);
  generate_background(c, background);
  renumber_transactions(c);
  truth.merge(plant_collecting_network(c, config.planted_collecting,
                                       config.collecting_window_months,
                                       collecting, truth));
  truth.merge(plant_layered_network(c, config.planted_layered,
                                    config.passthrough_ratio, layered, truth));
  build_relations(c, relations);
  return {std::move(c), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Table views

std::string BankCorpus::bank_name(const std::string& bank_id) const {
  return "Bank " + bank_id;
}

Table BankCorpus::customers_table(const std::optional<std::string>& bank) const {
  Table t{"CUSTOMERS",
          {"bank_id", "bank_name", "customer_id", "id_doc_number",
           "company_registration_id", "customer_type", "gender", "nationality",
           "birth_year"},
          {}};
  for (const Customer& cust : customers) {
    if (bank && cust.bank_id != *bank) continue;
    const Identity& id = identities[cust.identity];
    Cell doc = id.company ? Cell{}
                          : Cell{cust.doc_number_override.value_or(
                                id.id_doc_number)};
    Cell reg = id.company ? Cell{id.company_registration_id} : Cell{};
    t.rows.push_back(Row{cust.bank_id, bank_name(cust.bank_id),
                         cust.customer_id, doc, reg,
                         std::string(id.company ? "company" : "individual"),
                         id.company ? Cell{} : Cell{id.gender}, id.nationality,
                         std::to_string(id.birth_year)});
  }
  return t;
}

Table BankCorpus::link_table(const std::optional<std::string>& bank) const {
  Table t{"LINK",
          {"bank_id", "bank_name", "customer_id", "related_party_id",
           "relation_type", "relation_start_date", "relation_end_date"},
          {}};
  for (const Link& l : links) {
    if (bank && l.bank_id != *bank) continue;
    t.rows.push_back(Row{l.bank_id, bank_name(l.bank_id), l.customer_id,
                         l.related_party_id, l.relation_type,
                         format_date(l.start),
                         l.end ? Cell{format_date(*l.end)} : Cell{}});
  }
  return t;
}

Table BankCorpus::parties_table(const std::optional<std::string>& bank) const {
  Table t{"PARTIES",
          {"bank_id", "bank_name", "customer_id", "related_party_id",
           "id_doc_number", "company_registration_id", "gender", "nationality"},
          {}};
  for (const Party& p : parties) {
    if (bank && p.bank_id != *bank) continue;
    const Identity& id = identities[p.identity];
    t.rows.push_back(Row{p.bank_id, bank_name(p.bank_id), p.customer_id,
                         p.related_party_id, id.id_doc_number, Cell{},
                         id.gender, id.nationality});
  }
  return t;
}

Table BankCorpus::risk_table(const std::optional<std::string>& bank) const {
  Table t{"RISK",
          {"bank_id", "bank_name", "customer_id", "related_party_id",
           "fincrime_risk_exit", "black_list", "aml_flag", "risk_score"},
          {}};
  std::unordered_map<std::string, std::string> first_party;
  for (const Link& l : links) first_party.try_emplace(l.customer_id, l.related_party_id);
  for (const Customer& cust : customers) {
    if (bank && cust.bank_id != *bank) continue;
    bool banned = identities[cust.identity].banned;
    auto fp = first_party.find(cust.customer_id);
    int score = banned ? 60 + cust.risk_score : cust.risk_score;
    t.rows.push_back(Row{
        cust.bank_id, bank_name(cust.bank_id), cust.customer_id,
        fp == first_party.end() ? Cell{} : Cell{fp->second}, bool_text(banned),
        bool_text(cust.black_list_draw < (banned ? 0.6 : 0.001)),
        bool_text(cust.aml_draw < (banned ? 0.7 : 0.005)),
        std::to_string(score)});
  }
  return t;
}

Table BankCorpus::accounts_table(const std::optional<std::string>& bank) const {
  if (!bank) return accounts_to_table(accounts);
  std::vector<Account> subset;
  for (const Account& a : accounts) {
    if (a.bank_id == *bank) subset.push_back(a);
  }
  return accounts_to_table(subset);
}

Table BankCorpus::transactions_table(
    const std::optional<std::string>& bank) const {
  if (!bank) return transactions_to_table(transactions);
  std::unordered_map<std::string, const std::string*> bank_of;
  for (const Account& a : accounts) bank_of[a.account_id] = &a.bank_id;
  std::vector<Transaction> subset;
  for (const Transaction& t : transactions) {
    auto it = bank_of.find(t.src_account);
    if (it != bank_of.end() && *it->second == *bank) subset.push_back(t);
  }
  return transactions_to_table(subset);
}

// ---------------------------------------------------------------------------
// Files

namespace {

void write_lines(const std::filesystem::path& path,
                 const std::set<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

std::set<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.insert(line);
  }
  return out;
}

}  // namespace

CorpusFiles write_corpus(const std::filesystem::path& dir,
                         const BankCorpus& corpus, const GroundTruth& truth) {
  namespace fs = std::filesystem;
  CorpusFiles out;
  nlohmann::json tables = nlohmann::json::object();
  for (const BankSpec& bank : corpus.config.banks) {
    fs::path rel = fs::path("tables") / ("bank_" + bank.bank_id);
    fs::create_directories(dir / rel);
    const Table views[] = {corpus.customers_table(bank.bank_id),
                           corpus.link_table(bank.bank_id),
                           corpus.parties_table(bank.bank_id),
                           corpus.risk_table(bank.bank_id),
                           corpus.accounts_table(bank.bank_id),
                           corpus.transactions_table(bank.bank_id)};
    for (const Table& t : views) {
      fs::path file = rel / (t.name + ".csv");
      write_csv(dir / file, t);
      out.files.push_back(file.generic_string());
      tables[bank.bank_id][t.name] = {{"file", file.generic_string()},
                                      {"rows", t.size()}};
    }
  }
  fs::create_directories(dir / "ground_truth");
  const std::pair<const char*, const std::set<std::string>*> labels[] = {
      {"collecting_accounts", &truth.collecting_accounts},
      {"layered_accounts", &truth.layered_accounts},
      {"banned_entities", &truth.banned_entities}};
  nlohmann::json gt = nlohmann::json::object();
  for (const auto& [name, set] : labels) {
    fs::path file = fs::path("ground_truth") / (std::string(name) + ".txt");
    write_lines(dir / file, *set);
    out.files.push_back(file.generic_string());
    gt[name] = {{"file", file.generic_string()}, {"count", set->size()}};
  }

  Money flow{0};
  out.manifest = {
      {"seed", corpus.config.seed},
      {"rng", std::string(Rng::kAlgorithm)},
      {"config", corpus.config},
      {"corpus_start", format_date(corpus.config.start)},
      {"corpus_end", format_date(corpus.config.end())},
      {"tables", tables},
      {"ground_truth", gt},
      {"counts",
       {{"identities", corpus.identities.size()},
        {"customers", corpus.customers.size()},
        {"accounts", corpus.accounts.size()},
        {"parties", corpus.parties.size()},
        {"links", corpus.links.size()},
        {"transactions", corpus.transactions.size()}}},
      // Every transfer is account-to-account inside the corpus.
      {"net_external_flow", format_money(flow)},
      {"background_model",
       "stand-in: Poisson arrivals per account, log-normal amounts; not "
       "fitted to observed data"},
      {"files", out.files}};
  return out;
}

GroundTruth read_ground_truth(const std::filesystem::path& dir) {
  GroundTruth gt;
  auto base = dir / "ground_truth";
  gt.collecting_accounts = read_lines(base / "collecting_accounts.txt");
  gt.layered_accounts = read_lines(base / "layered_accounts.txt");
  gt.banned_entities = read_lines(base / "banned_entities.txt");
  return gt;
}

Table read_corpus_table(const std::filesystem::path& dir,
                        const std::string& table_name) {
  namespace fs = std::filesystem;
  fs::path tables = dir / "tables";
  if (!fs::is_directory(tables)) {
    throw MissingInputError("no corpus tables under " + dir.string());
  }
  std::vector<fs::path> banks;
  for (const auto& entry : fs::directory_iterator(tables)) {
    if (entry.is_directory()) banks.push_back(entry.path());
  }
  std::sort(banks.begin(), banks.end(), [](const fs::path& a, const fs::path& b) {
    auto sa = a.filename().string();
    auto sb = b.filename().string();
    return std::make_pair(sa.size(), sa) < std::make_pair(sb.size(), sb);
  });
  Table out{table_name, {}, {}};
  bool have_header = false;
  for (const fs::path& bank : banks) {
    fs::path file = bank / (table_name + ".csv");
    if (!fs::exists(file)) {
      throw MissingInputError("missing " + file.string());
    }
    for_each_csv_row(file, [&](const std::vector<std::string>& header,
                               const Row& row) {
      if (!have_header) {
        out.columns = header;
        have_header = true;
      } else if (header != out.columns) {
        throw SchemaError(file.string() + " header differs from other banks");
      }
      out.rows.push_back(row);
    });
    if (!have_header) {
      // Empty table file: still record the header.
      std::ifstream in(file, std::ios::binary);
      CsvReader reader(in);
      out.columns = reader.header();
      have_header = true;
    }
  }
  return out;
}

}  // namespace amlwb::synth
