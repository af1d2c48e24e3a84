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

#ifndef AMLWB_RNG_HPP_
#define AMLWB_RNG_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace amlwb {

/// Seeded generator whose output is fully specified: the engine is
/// std::mt19937_64 (bit-exact across standard libraries) and every derived
/// distribution is implemented here rather than taken from <random>, whose
/// distributions are implementation-defined.
///
///   uniform()  = (next_u64() >> 11) * 2^-53
///   below(n)   = rejection sampling on the top bits
///   normal()   = polar-free Box-Muller, second variate cached
///   poisson(l) = Knuth multiplication for l < 30, rounded normal otherwise
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+box-muller/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double lognormal(double mu, double sigma);
  std::uint64_t poisson(double lambda);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Independent child stream; the child seed is splitmix64(seed ^ stream).
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace amlwb

#endif  // AMLWB_RNG_HPP_
