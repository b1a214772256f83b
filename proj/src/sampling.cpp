#include "addfunc/sampling.hpp"

#include <bit>
#include <cmath>
#include <deque>

#include "addfunc/errors.hpp"

namespace addfunc {

std::int64_t Histogram::total() const {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

namespace {

// SplitMix64 finalizer; full-avalanche mixing for seed derivation.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Rng Rng::from(std::uint64_t master, std::uint64_t trial, std::uint64_t lane) {
  const std::uint64_t h1 = mix64(master ^ mix64(trial ^ mix64(lane)));
  const std::uint64_t h2 = mix64(h1);
  const std::uint64_t h3 = mix64(h2);
  const std::uint64_t h4 = mix64(h3);
  std::seed_seq seq{static_cast<std::uint32_t>(h1), static_cast<std::uint32_t>(h1 >> 32),
                    static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32),
                    static_cast<std::uint32_t>(h3), static_cast<std::uint32_t>(h3 >> 32),
                    static_cast<std::uint32_t>(h4), static_cast<std::uint32_t>(h4 >> 32)};
  Rng r;
  r.eng_.seed(seq);
  return r;
}

double Rng::uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

namespace {

// Knuth inversion by uniform products; O(mean) uniforms, exact.
std::int64_t poisson_small(double mean, Rng& rng) {
  const double limit = std::exp(-mean);
  double prod = 1.0;
  std::int64_t count = -1;
  do {
    prod *= rng.uniform01();
    ++count;
  } while (prod > limit);
  return count;
}

// Hormann's PTRS transformed rejection; valid for mean >= 10, used at >= 30.
std::int64_t poisson_ptrs(double mean, Rng& rng) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform01() - 0.5;
    const double v = rng.uniform01();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        static_cast<double>(k) * loglam - mean - std::lgamma(static_cast<double>(k) + 1.0))
      return k;
  }
}

}  // namespace

std::int64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw EstimatorError("Poisson mean must be nonnegative");
  if (mean == 0.0) return 0;
  if (mean < 30.0) return poisson_small(mean, *this);
  return poisson_ptrs(mean, *this);
}

std::int64_t Rng::binomial_half(std::int64_t n) {
  if (n < 0) throw EstimatorError("binomial_half needs n >= 0");
  std::int64_t s = 0;
  while (n >= 64) {
    s += std::popcount(eng_());
    n -= 64;
  }
  if (n > 0) s += std::popcount(eng_() & ((~0ull) >> (64 - n)));
  return s;
}

AliasTable::AliasTable(const ProbabilityVector& P) {
  P.validate();
  const std::size_t k = P.p.size();
  prob_.assign(k, 0.0);
  alias_.assign(k, 0);
  std::vector<double> scaled(k);
  for (std::size_t i = 0; i < k; ++i) scaled[i] = P.p[i] * static_cast<double>(k);
  // Deque-based Vose construction; index order is fixed, so the table (and
  // every stream drawn through it) is deterministic.
  std::deque<std::size_t> small, large;
  for (std::size_t i = 0; i < k; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.front();
    small.pop_front();
    const std::size_t l = large.front();
    prob_[s] = scaled[s];
    alias_[s] = static_cast<std::int64_t>(l);
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_front();
      small.push_back(l);
    }
  }
  while (!large.empty()) {
    prob_[large.front()] = 1.0;
    large.pop_front();
  }
  while (!small.empty()) {  // numerical leftovers
    prob_[small.front()] = 1.0;
    small.pop_front();
  }
}

std::int64_t AliasTable::sample(Rng& rng) const {
  const double u = rng.uniform01() * static_cast<double>(prob_.size());
  auto j = static_cast<std::size_t>(u);
  if (j >= prob_.size()) j = prob_.size() - 1;  // u == k after rounding
  const double frac = u - static_cast<double>(j);
  return frac < prob_[j] ? static_cast<std::int64_t>(j) : alias_[j];
}

Histogram sample_multinomial(const ProbabilityVector& P, std::int64_t n, Rng& rng) {
  return sample_multinomial(AliasTable(P), n, rng);
}

Histogram sample_multinomial(const AliasTable& table, std::int64_t n, Rng& rng) {
  if (n < 0) throw ConfigError("sample_multinomial needs n >= 0");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(table.k()), 0);
  h.regime = Regime::multinomial;
  h.n = n;
  for (std::int64_t i = 0; i < n; ++i) ++h.counts[static_cast<std::size_t>(table.sample(rng))];
  return h;
}

SplitHistograms poissonize_and_split(const ProbabilityVector& P, std::int64_t n, Rng& rng,
                                     bool literal) {
  if (n < 0) throw ConfigError("poissonize_and_split needs n >= 0");
  P.validate();
  SplitHistograms out;
  out.base_n = n;
  const std::size_t k = P.p.size();
  out.primary.counts.assign(k, 0);
  out.selector.counts.assign(k, 0);
  out.primary.regime = out.selector.regime = Regime::poissonized;
  out.primary.n = out.selector.n = n;
  if (literal) {
    // Total ~ Poisson(2n), categorical symbol draws, fair coin routing.
    const std::int64_t total = rng.poisson(2.0 * static_cast<double>(n));
    AliasTable table(P);
    std::uint64_t coin_bits = 0;
    int bits_left = 0;
    for (std::int64_t i = 0; i < total; ++i) {
      const auto sym = static_cast<std::size_t>(table.sample(rng));
      if (bits_left == 0) {
        coin_bits = rng.next();
        bits_left = 64;
      }
      const bool to_primary = coin_bits & 1u;
      coin_bits >>= 1;
      --bits_left;
      ++(to_primary ? out.primary : out.selector).counts[sym];
    }
  } else {
    // Equivalent shortcut: the split halves are independent Poisson(n p_i)
    // per symbol, so draw them directly.
    for (std::size_t i = 0; i < k; ++i) {
      const double lam = static_cast<double>(n) * P.p[i];
      out.primary.counts[i] = rng.poisson(lam);
      out.selector.counts[i] = rng.poisson(lam);
    }
  }
  return out;
}

ProbabilityVector distribution_zoo(ZooKind kind, std::int64_t k, double param) {
  if (k < 1) throw ConfigError("distribution_zoo needs k >= 1");
  ProbabilityVector P;
  P.p.assign(static_cast<std::size_t>(k), 0.0);
  switch (kind) {
    case ZooKind::uniform: {
      const double v = 1.0 / static_cast<double>(k);
      for (auto& x : P.p) x = v;
      break;
    }
    case ZooKind::zipf: {
      if (!(param >= 0.0)) throw ConfigError("zipf exponent must be >= 0");
      double z = 0.0;
      for (std::int64_t i = 1; i <= k; ++i) z += std::pow(static_cast<double>(i), -param);
      for (std::int64_t i = 1; i <= k; ++i)
        P.p[static_cast<std::size_t>(i - 1)] = std::pow(static_cast<double>(i), -param) / z;
      break;
    }
    case ZooKind::two_point: {
      if (k < 2) throw ConfigError("two_point needs k >= 2");
      if (!(param >= 0.0 && param <= 1.0)) throw ConfigError("two_point mass must lie in [0,1]");
      P.p[0] = 1.0 - param;
      const double tail = param / static_cast<double>(k - 1);
      for (std::int64_t i = 1; i < k; ++i) P.p[static_cast<std::size_t>(i)] = tail;
      break;
    }
    case ZooKind::half_tiny: {
      if (k < 2) throw ConfigError("half_tiny needs k >= 2");
      if (!(param > 0.0 && param < 1.0)) throw ConfigError("half_tiny mass must lie in (0,1)");
      const std::int64_t head = (k + 1) / 2;
      const double hv = (1.0 - param) / static_cast<double>(head);
      const double tv = param / static_cast<double>(k - head);
      for (std::int64_t i = 0; i < k; ++i)
        P.p[static_cast<std::size_t>(i)] = i < head ? hv : tv;
      break;
    }
  }
  return P;
}

ProbabilityVector distribution_zoo(const std::string& name, std::int64_t k) {
  std::string base = name;
  double param = 0.0;
  bool has_param = false;
  if (auto pos = name.find(':'); pos != std::string::npos) {
    base = name.substr(0, pos);
    try {
      param = std::stod(name.substr(pos + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad distribution parameter in '" + name + "'");
    }
    has_param = true;
  }
  if (base == "uniform") return distribution_zoo(ZooKind::uniform, k, 0.0);
  if (base == "zipf") return distribution_zoo(ZooKind::zipf, k, has_param ? param : 1.0);
  if (base == "two_point") return distribution_zoo(ZooKind::two_point, k, has_param ? param : 0.5);
  if (base == "half_tiny") return distribution_zoo(ZooKind::half_tiny, k, has_param ? param : 0.01);
  throw ConfigError("unknown distribution '" + name + "'");
}

}  // namespace addfunc
