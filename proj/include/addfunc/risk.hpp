#pragma once

// Risk measurement harness: Monte Carlo bias/variance/MSE over grids of
// (n, k, distribution), exact Poisson-expectation oracles for bias claims too
// small to reach by simulation, log-log rate fitting with bootstrap bands,
// and the two-point lower-bound diagnostic.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "addfunc/estimators.hpp"
#include "addfunc/phi.hpp"
#include "addfunc/sampling.hpp"

namespace addfunc {

struct CellStats {
  std::int64_t n = 0;
  std::int64_t k = 0;
  std::string dist;
  Mode mode = Mode::plugin;
  int trials = 0;
  double theta = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // population variance, so mse = bias^2 + variance
  double mse = 0.0;
  double stderr_mean = 0.0;  // sqrt(variance / trials)
  std::uint64_t seed = 0;    // per-cell seed lineage derived from the master
  double regime_ratio = 0.0;  // n ln k / k^(1/alpha), reported not enforced
  bool failed = false;
  std::string error;
  std::vector<double> estimates;  // per-trial values (for bootstrap consumers)
};

// Runs `trials` independent sample->estimate rounds against theta_true.
// Sampling follows the mode: plugin-family modes draw multinomial samples,
// split modes draw independent poissonized halves. Trial t uses the RNG
// stream (seed, t), so results are reproducible under any scheduling.
// Estimator failures mark the cell failed rather than throwing.
CellStats monte_carlo_risk(const PhiSpec& spec, const ProbabilityVector& P,
                           const EstimatorConfig& cfg, int trials, std::uint64_t seed,
                           PolyCache* cache = nullptr);

// E[fn(J)] for J ~ Poisson(lambda), by direct summation over a window around
// lambda extended until the un-summed tail mass is below tail_tol.
// Accumulation is in extended precision. A non-finite fn value aborts with
// the offending count in the message.
double exact_poisson_expectation(const std::function<double(std::int64_t)>& fn, double lambda,
                                 double tail_tol = 1e-14);

struct PoissonMoments {
  double mean = 0.0;
  double variance = 0.0;  // two-pass: sum pmf * (fn - mean)^2
};
PoissonMoments exact_poisson_moments(const std::function<double(std::int64_t)>& fn, double lambda,
                                     double tail_tol = 1e-14);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_lo = 0.0;  // 2.5% bootstrap percentile
  double slope_hi = 0.0;  // 97.5% bootstrap percentile
  int excluded = 0;       // nonpositive-y points dropped before fitting
};

// OLS of log y on log x with a percentile bootstrap band (200 resamples,
// fixed internal seed: the band is part of the deterministic report).
FitResult fit_log_log(std::span<const double> x, std::span<const double> y,
                      int bootstrap = 200);

enum class Covariate { n, k, n_ln_n };

struct RiskReport {
  std::string phi_id;
  Mode mode = Mode::plugin;
  double C1 = 0.0, C2 = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<CellStats> cells;
  double wall_seconds = 0.0;  // never serialized: reports must be byte-stable

  // One row per cell: n,k,dist,mode,trials,bias,var,mse,stderr,seed.
  // Leading '#' comment lines embed the effective config; numbers print with
  // enough digits to round-trip, so identical runs yield identical bytes.
  std::string csv() const;
  // Cells plus fitted MSE slopes (vs n when the n-grid has >= 4 points, vs k
  // likewise). Deterministic for a fixed config+seed.
  std::string summary_json() const;
};

// MSE-vs-covariate slope over the report's non-failed cells (the n_ln_n
// covariate deflates x to n*ln n). Needs >= 4 distinct points.
FitResult rate_fit(const RiskReport& report, Covariate cov);

struct GridSpec {
  std::vector<std::int64_t> n_grid;
  std::vector<std::int64_t> k_grid;
  std::vector<std::string> dists;  // distribution_zoo names
  int trials = 100;
};

// Full sweep: every (n, k, dist) cell, estimator failures recorded per cell.
RiskReport run_grid(const PhiSpec& spec, const GridSpec& grid, const EstimatorConfig& cfg,
                    std::uint64_t master_seed, PolyCache* cache = nullptr);

struct LeCamResult {
  double delta_theta = 0.0;  // |theta(P) - theta(Q)|
  double kl = 0.0;           // KL(P || Q), exact closed form
  double chi2_half = 0.0;    // (p-q)^2 / (2 p (1-p)), the local quadratic proxy for kl
  double bound = 0.0;        // delta_theta^2 / 4 * exp(-n * kl)
};

// Two-point lower-bound diagnostic on the pair P = (1-p, p/(k-1), ...),
// Q = (1-q, q/(k-1), ...). The alphabet size cancels from KL analytically;
// theta uses the two-value closed form. p = q degenerates to bound 0.
LeCamResult lecam_two_point(const PhiSpec& spec, std::int64_t n, std::int64_t k, double p,
                            double q);

}  // namespace addfunc
