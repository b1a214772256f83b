#pragma once

// Data generation: histograms, counter-seeded RNG streams, multinomial and
// poissonized sampling, and the stock distribution zoo.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "addfunc/phi.hpp"

namespace addfunc {

enum class Regime { multinomial, poissonized };

struct Histogram {
  std::vector<std::int64_t> counts;
  Regime regime = Regime::multinomial;
  // Sample budget: for multinomial data the number of draws; for poissonized
  // data the intensity parameter (realized totals fluctuate around it).
  std::int64_t n = 0;

  std::int64_t k() const { return static_cast<std::int64_t>(counts.size()); }
  std::int64_t total() const;
};

// Independent poissonized halves: primary feeds the high-count estimator,
// selector decides the branch. Each half has intensity base_n.
struct SplitHistograms {
  Histogram primary;
  Histogram selector;
  std::int64_t base_n = 0;
};

// Deterministic per-trial RNG. The stream for (master, trial, lane) is a pure
// function of those three values (SplitMix-style mixing into a seeded
// mt19937_64), so parallel trials reproduce bit-identically regardless of
// thread schedule. Poisson sampling is pinned to a fixed algorithm pair
// (inversion-by-multiplication under mean 30, PTRS rejection at and above)
// rather than std::poisson_distribution, whose algorithm is
// implementation-defined.
class Rng {
 public:
  static Rng from(std::uint64_t master, std::uint64_t trial = 0, std::uint64_t lane = 0);

  std::uint64_t next() { return eng_(); }
  double uniform01();  // in [0,1), 53-bit resolution
  std::int64_t poisson(double mean);
  std::int64_t binomial_half(std::int64_t n);  // Bin(n, 1/2) via popcounts

 private:
  std::mt19937_64 eng_;
};

// Vose alias table for repeated categorical draws from a fixed P.
class AliasTable {
 public:
  explicit AliasTable(const ProbabilityVector& P);
  std::int64_t k() const { return static_cast<std::int64_t>(prob_.size()); }
  std::int64_t sample(Rng& rng) const;

 private:
  std::vector<double> prob_;
  std::vector<std::int64_t> alias_;
};

Histogram sample_multinomial(const ProbabilityVector& P, std::int64_t n, Rng& rng);
Histogram sample_multinomial(const AliasTable& table, std::int64_t n, Rng& rng);

// Two independent Poisson(n * p_i) histograms. The default draws each half's
// counts directly per symbol; literal=true runs the textbook construction
// (total ~ Poisson(2n), categorical draws, fair Bernoulli routing), which is
// distributionally identical and kept for fidelity tests.
SplitHistograms poissonize_and_split(const ProbabilityVector& P, std::int64_t n, Rng& rng,
                                     bool literal = false);

enum class ZooKind { uniform, zipf, two_point, half_tiny };

// uniform:    p_i = 1/k
// zipf:       p_i proportional to i^-param
// two_point:  p_1 = 1 - param, remaining mass spread over k-1 symbols
// half_tiny:  first ceil(k/2) symbols share 1-param, rest share param
ProbabilityVector distribution_zoo(ZooKind kind, std::int64_t k, double param = 0.0);
// "uniform", "zipf:1.0", "two_point:0.5", "half_tiny:0.01"
ProbabilityVector distribution_zoo(const std::string& name, std::int64_t k);

}  // namespace addfunc
