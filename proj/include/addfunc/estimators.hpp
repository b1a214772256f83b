#pragma once

// Estimators of theta(P; phi) = sum_i phi(p_i).
//
// The workhorse is a regime-switching estimator: an independent selector
// histogram routes each symbol either to a bias-corrected plugin value (counts
// comfortably above threshold) or to an unbiased polynomial-moment value built
// from the best uniform approximation of phi near zero (counts at or below
// threshold). Plain and bias-corrected plugin estimators are provided both as
// baselines and as the high-count branch.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "addfunc/phi.hpp"
#include "addfunc/poly.hpp"
#include "addfunc/sampling.hpp"
#include "addfunc/smoothing.hpp"

namespace addfunc {

enum class Mode { hybrid4, hybrid2, plugin, plugin2, plugin4, poly_only };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);  // throws ConfigError

// Tuning knobs. The derived quantities follow the sample size:
//   delta_count = C2 ln n        (count threshold scale)
//   L           = floor(C1 ln n), clamped >= 1   (polynomial degree)
//   poly branch approximates phi on [0, 4 delta_count / n]
//   plugin branch activates at selector counts >= 2 delta_count
//
// The defaults C2 = 1.0, C1 = 0.6 are practical desk-scale choices. The
// constants that make the worst-case risk analysis go through
// (6 C1 ln2 + 4 sqrt(C1 C2)(1 + ln2) <= 3 - 2 alpha with C2 > 16 alpha) force
// degree L = 0 for any feasible n; strict_theory opts into checking them for
// asymptotic experiments.
struct EstimatorConfig {
  Mode mode = Mode::hybrid4;
  double C1 = 0.6;
  double C2 = 1.0;
  std::int64_t n = 0;  // sample budget / Poisson intensity per histogram
  std::int64_t k = 0;  // alphabet size; 0 = take it from the data
  bool strict_theory = false;
  bool force = false;  // bypass the mode/alpha regime guard
  bool literal_split = false;
  std::uint64_t seed = 0;  // drives the thinning split when data arrive unsplit
  // Branch threshold override in counts (+inf = all symbols to the poly
  // branch; poly_only sets this implicitly).
  std::optional<double> threshold_count_override;

  double delta_count() const;
  double delta_prob() const;
  int degree() const;
  double poly_hi() const;     // right end of the approximation interval
  double threshold() const;   // selector counts >= threshold -> plugin branch
  EstimatorConfig with_n(std::int64_t nn) const;

  // Hard checks throw ConfigError (n too small, nonpositive constants, poly
  // interval escaping [0,1], strict_theory constraint failures, mode/alpha
  // mismatch without force). Soft findings come back as warning strings.
  std::vector<std::string> validate(double alpha) const;
};

struct EstimateResult {
  double value = 0.0;
  Mode mode = Mode::plugin;
  std::int64_t plugin_branch = 0;  // symbols routed to the plugin branch
  std::int64_t poly_branch = 0;    // symbols routed to the polynomial branch
  double delta_count = 0.0;
  int degree = 0;
  std::vector<std::string> warnings;
};

// Plain plugin: sum_i phi(N_i / n). Multinomial data use the declared n;
// poissonized data divide by the realized total (floored at 1). The functional
// is canonicalized first (its slope at zero is folded out), which changes no
// value here but pins down invariance exactly.
// Throws EstimatorError for an empty multinomial histogram (n = 0).
double plugin_estimate(const PhiSpec& spec, const Histogram& hist);

// N! / (N-m)!, exactly; 0 when m > N. Throws EstimatorError if the exact
// value does not fit in 64 bits.
std::uint64_t falling_factorial(std::uint64_t N, std::uint64_t m);

// Dense-grid [min, max] of phi over [lo, hi]; the grid is graded toward lo
// (10^4 points by default) since phi may be non-monotone.
std::pair<double, double> phi_range(const PhiSpec& spec, double lo, double hi,
                                    int points = 10000);

// Low-count branch: g(N) = sum_m a_m (N)_m / n^m for a polynomial
// sum_m a_m p^m approximating phi on [0, poly_hi]. Each term grows the
// falling-factorial product one ratio (N-j)/n at a time, so very large
// coefficients meet very small products without overflow; terms are summed
// with compensation. Under Poisson(np) counts the pre-clamp value is exactly
// unbiased for the polynomial at p. The clamped call truncates into
// [phi_inf, phi_sup], the range of phi on [0, delta_prob].
class BestPolyEstimator {
 public:
  BestPolyEstimator(Polynomial poly, std::int64_t n, double phi_inf, double phi_sup);
  // Convenience: remez fit on [0, cfg.poly_hi()] (through `cache` when given)
  // plus truncation bounds on [0, cfg.delta_prob()].
  static BestPolyEstimator build(const PhiSpec& spec, const EstimatorConfig& cfg,
                                 PolyCache* cache = nullptr);

  double raw(std::int64_t N) const;         // pre-clamp
  double operator()(std::int64_t N) const;  // clamped into [phi_inf, phi_sup]

  double phi_inf() const { return inf_; }
  double phi_sup() const { return sup_; }
  const Polynomial& poly() const { return poly_; }

 private:
  Polynomial poly_;
  std::int64_t n_;
  double inf_, sup_;
};

// Second-order bias-corrected plugin on the smoothed functional (blend order
// L = 4):  H(N/n) - (N / 2n^2) H''(N/n).
double bias_corrected2(const SmoothedPhi& s, std::int64_t N, std::int64_t n);

// Fourth-order version (blend order L = 6):
//
//   H(x) - (N/2n^2) H''(x) + (N/3n^3) H'''(x)
//        - (N/4n^4) H''''(x) + (N^2/8n^4) H''''(x),   x = N/n.
//
// These coefficients make the estimator map monomials x^d (d <= 4) to
// (N)_d / n^d exactly, hence exactly unbiased for polynomials of degree <= 4
// under Poisson counts wherever H coincides with phi.
double bias_corrected4(const SmoothedPhi& s, std::int64_t N, std::int64_t n);

// The regime-switching estimator over a split pair: selector count >=
// threshold routes symbol i to bias_corrected2/4(primary count), anything
// below goes to the clamped polynomial branch. Sums deterministically.
EstimateResult hybrid_estimate(const PhiSpec& spec, const SplitHistograms& split,
                               const EstimatorConfig& cfg, PolyCache* cache = nullptr);

// Mode dispatch. The Histogram overload feeds plugin modes directly; hybrid
// modes first thin the histogram into two synthetic halves (each count split
// Bin(N, 1/2), seeded by cfg.seed) and run on an effective budget of n/2.
EstimateResult estimate(const PhiSpec& spec, const Histogram& hist, const EstimatorConfig& cfg,
                        PolyCache* cache = nullptr);
EstimateResult estimate(const PhiSpec& spec, const SplitHistograms& split,
                        const EstimatorConfig& cfg, PolyCache* cache = nullptr);

}  // namespace addfunc
