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

// Labeled synthetic multi-bank corpus generator.
//
// A corpus is a population of identities (individuals and companies) that
// hold customer records, one per account, across several banks. Related
// parties are individuals from the same population, so the relation graph
// links identities across banks. Two laundering patterns are planted on top
// of Poisson/log-normal background traffic:
//
//   collecting  short-lived accounts (open <= window months) that receive
//               transfers from >= 3 accounts of banned customers;
//   layered     pass-through accounts that transact with a collector and
//               keep an end-of-week balance <= ratio * weekly inbound.

#ifndef AMLWB_SYNTH_HPP_
#define AMLWB_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlwb/date.hpp"
#include "amlwb/records.hpp"
#include "amlwb/rng.hpp"
#include "amlwb/table.hpp"

namespace amlwb::synth {

struct BankSpec {
  std::string bank_id;
  std::size_t account_count = 0;
};

struct NationalityWeight {
  std::string code;
  double weight = 0.0;
};

struct CorpusConfig {
  std::vector<BankSpec> banks;
  Date start = Date{std::chrono::year{2017} / 1 / 1};
  int months = 24;
  double fraction_companies = 0.10;
  std::vector<NationalityWeight> nationality_mix = {
      {"GB", 750.0}, {"PL", 11.0}, {"RO", 5.0}, {"IN", 4.0}, {"OTHER", 2.0}};
  double accounts_per_identity = 4.6;
  double banned_fraction = 0.003;
  std::size_t planted_collecting = 20;
  std::size_t planted_layered = 30;
  int collecting_window_months = 8;
  double passthrough_ratio = 0.2;
  /// Background transfers per account per active month.
  double background_rate = 0.45;
  /// Mean related-party links for an ordinary customer record.
  double mean_links = 0.2;
  /// Share of individuals that can appear as a related party.
  double party_fraction = 0.33;
  /// Inject case/whitespace noise into id_doc_number.
  bool noise = false;
  std::uint64_t seed = 7;

  /// Six banks with account counts of 273k/177k/154k/147k/95k/74k multiplied
  /// by `scale` (rounded, at least 1).
  static CorpusConfig scaled(double scale, std::uint64_t seed);

  /// Throws ConfigError on any invalid field.
  void validate() const;

  Date end() const { return add_months(start, months); }
  std::size_t total_accounts() const;
};

void to_json(nlohmann::json& j, const CorpusConfig& c);
void from_json(const nlohmann::json& j, CorpusConfig& c);

struct Identity {
  bool company = false;
  std::string id_doc_number;            // individuals
  std::string company_registration_id;  // companies
  std::string gender;                   // "female" | "male" | "" for companies
  std::string nationality;
  int birth_year = 0;
  int community = 0;
  bool banned = false;

  /// "individual_<id>" or "company_<id>".
  std::string doc_id() const;
};

struct Customer {
  std::string bank_id;
  std::string customer_id;
  std::size_t identity = 0;
  double black_list_draw = 1.0;
  double aml_draw = 1.0;
  int risk_score = 0;
  /// Noisy spelling of the identity's document number when noise is on.
  std::optional<std::string> doc_number_override;
};

struct Party {
  std::string bank_id;
  std::string related_party_id;
  std::string customer_id;  // customer that first introduced the party
  std::size_t identity = 0;
};

struct Link {
  std::string bank_id;
  std::string customer_id;
  std::string related_party_id;
  std::string relation_type;
  Date start;
  std::optional<Date> end;
};

struct BankCorpus {
  CorpusConfig config;
  std::vector<Identity> identities;
  std::vector<Customer> customers;  // parallel to accounts
  std::vector<Account> accounts;
  std::vector<Party> parties;
  std::vector<Link> links;
  std::vector<Transaction> transactions;

  std::string bank_name(const std::string& bank_id) const;

  /// Table views in Table 2 column layout. `bank_id` restricts the rows to
  /// one bank; transactions are filed under the source account's bank.
  Table customers_table(const std::optional<std::string>& bank_id = {}) const;
  Table link_table(const std::optional<std::string>& bank_id = {}) const;
  Table parties_table(const std::optional<std::string>& bank_id = {}) const;
  Table risk_table(const std::optional<std::string>& bank_id = {}) const;
  Table accounts_table(const std::optional<std::string>& bank_id = {}) const;
  Table transactions_table(const std::optional<std::string>& bank_id = {}) const;
};

struct GroundTruth {
  std::set<std::string> collecting_accounts;
  std::set<std::string> layered_accounts;
  std::set<std::string> banned_entities;  // doc ids

  void merge(const GroundTruth& delta);
};

/// Builds the full corpus: population, accounts, banned sample, background
/// traffic, both planted patterns, then relations and risk. Deterministic
/// per config.seed. Throws ConfigError when the config is infeasible.
std::pair<BankCorpus, GroundTruth> generate_corpus(const CorpusConfig& config);

/// Plants `count` collector accounts. Each is opened and closed within
/// `window_months` whole months and receives transfers from 3 to 5 distinct
/// accounts of banned identities; its owner is marked banned. Existing
/// transfers touching a chosen collector are removed.
/// Throws ConfigError when too few eligible accounts or banned senders exist.
GroundTruth plant_collecting_network(BankCorpus& corpus, std::size_t count,
                                     int window_months, Rng& rng,
                                     const GroundTruth& existing = {});

/// Plants `count` pass-through accounts, each transacting with a collector
/// from `existing.collecting_accounts`. In every week with activity the
/// account receives an inbound sum X and forwards all but floor(r X),
/// r < passthrough_ratio. Throws ConfigError when no collector exists or too
/// few eligible accounts remain.
GroundTruth plant_layered_network(BankCorpus& corpus, std::size_t count,
                                  double passthrough_ratio, Rng& rng,
                                  const GroundTruth& existing);

/// Relative paths of every file written by write_corpus, plus the manifest
/// section describing them.
struct CorpusFiles {
  std::vector<std::string> files;
  nlohmann::json manifest;
};

/// Writes tables/bank_<id>/<TABLE>.csv for each bank and
/// ground_truth/{collecting_accounts,layered_accounts,banned_entities}.txt
/// under `dir`.
CorpusFiles write_corpus(const std::filesystem::path& dir,
                         const BankCorpus& corpus, const GroundTruth& truth);

GroundTruth read_ground_truth(const std::filesystem::path& dir);

inline constexpr const char* kTableNames[] = {
    "CUSTOMERS", "LINK", "PARTIES", "RISK", "ACCOUNTS", "TRANSACTIONS"};

/// Concatenates one table across all bank directories under `dir`/tables,
/// in bank directory order.
Table read_corpus_table(const std::filesystem::path& dir,
                        const std::string& table_name);

}  // namespace amlwb::synth

#endif  // AMLWB_SYNTH_HPP_
