#include "addfunc/risk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "addfunc/errors.hpp"
#include "addfunc/reduce.hpp"
#include "json.hpp"

namespace addfunc {

namespace {

ProbabilityVector make_dist(const std::string& name, std::int64_t k) {
  return distribution_zoo(name, k);
}

double checked_ratio(std::int64_t n, std::int64_t k, double alpha) {
  if (k < 2 || alpha <= 0.0) return 0.0;
  const double kd = static_cast<double>(k);
  return static_cast<double>(n) * std::log(kd) / std::pow(kd, 1.0 / alpha);
}

}  // namespace

CellStats monte_carlo_risk(const PhiSpec& spec, const ProbabilityVector& P,
                           const EstimatorConfig& cfg, int trials, std::uint64_t seed,
                           PolyCache* cache) {
  if (trials < 2) throw ConfigError("monte_carlo_risk needs at least 2 trials");
  P.validate();

  CellStats cell;
  cell.n = cfg.n;
  cell.k = P.k();
  cell.mode = cfg.mode;
  cell.trials = trials;
  cell.seed = seed;
  cell.theta = theta_true(spec, P);
  cell.regime_ratio = checked_ratio(cfg.n, P.k(), spec.alpha);
  cell.estimates.assign(static_cast<std::size_t>(trials), 0.0);

  const bool split_mode =
      cfg.mode == Mode::hybrid4 || cfg.mode == Mode::hybrid2 || cfg.mode == Mode::poly_only;

  const auto run_one = [&](std::int64_t t) {
    Rng rng = Rng::from(seed, static_cast<std::uint64_t>(t));
    if (split_mode) {
      const SplitHistograms split = poissonize_and_split(P, cfg.n, rng, cfg.literal_split);
      return estimate(spec, split, cfg, cache).value;
    }
    const Histogram hist = sample_multinomial(P, cfg.n, rng);
    return estimate(spec, hist, cfg, cache).value;
  };

  // Trial 0 runs eagerly and serially: failures here are deterministic
  // (bad config, remez breakdown) and abort the cell cleanly. The parallel
  // remainder must not leak exceptions across the parallel region, so any
  // straggler failure degrades to NaN and is swept up afterwards.
  try {
    cell.estimates[0] = run_one(0);
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
    cell.estimates.clear();
    return cell;
  }
  par::map_fill(trials - 1, cell.estimates.data() + 1, [&](std::int64_t t) {
    try {
      return run_one(t + 1);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });
  for (double v : cell.estimates) {
    if (!std::isfinite(v)) {
      cell.failed = true;
      cell.error = "estimator failed or returned a non-finite value mid-cell";
      cell.estimates.clear();
      return cell;
    }
  }

  const std::int64_t T = trials;
  const auto& est = cell.estimates;
  cell.mean = serial::map_sum(T, [&](std::int64_t t) {
                return est[static_cast<std::size_t>(t)];
              }) /
              static_cast<double>(T);
  cell.bias = cell.mean - cell.theta;
  cell.variance = serial::map_sum(T, [&](std::int64_t t) {
                    const double d = est[static_cast<std::size_t>(t)] - cell.mean;
                    return d * d;
                  }) /
                  static_cast<double>(T);
  cell.mse = serial::map_sum(T, [&](std::int64_t t) {
               const double d = est[static_cast<std::size_t>(t)] - cell.theta;
               return d * d;
             }) /
             static_cast<double>(T);
  cell.stderr_mean = std::sqrt(cell.variance / static_cast<double>(T));
  return cell;
}

namespace {

struct PoissonWindow {
  std::vector<double> pmf;  // index j - j0
  std::int64_t j0 = 0;
};

// pmf over a window with combined mass >= 1 - tail_tol. Extended precision
// keeps the mass bookkeeping honest near the 1e-14 target.
PoissonWindow poisson_window(double lambda, double tail_tol) {
  if (!(lambda > 0.0)) throw ConfigError("Poisson oracle needs lambda > 0");
  if (!(tail_tol > 0.0)) throw ConfigError("Poisson oracle needs tail_tol > 0");
  const double sd = std::sqrt(lambda);
  std::int64_t j0 = static_cast<std::int64_t>(std::floor(lambda - 10.0 * sd - 20.0));
  j0 = std::max<std::int64_t>(j0, 0);
  std::int64_t j1 = static_cast<std::int64_t>(std::ceil(lambda + 10.0 * sd + 20.0));

  const auto log_pmf = [lambda](std::int64_t j) -> long double {
    return static_cast<long double>(j) * std::log(static_cast<long double>(lambda)) -
           static_cast<long double>(lambda) - lgammal(static_cast<long double>(j) + 1.0L);
  };

  for (int attempt = 0; attempt < 64; ++attempt) {
    long double mass = 0.0L;
    std::vector<double> pmf;
    pmf.reserve(static_cast<std::size_t>(j1 - j0 + 1));
    for (std::int64_t j = j0; j <= j1; ++j) {
      const long double p = expl(log_pmf(j));
      pmf.push_back(static_cast<double>(p));
      mass += p;
    }
    if (1.0L - mass < static_cast<long double>(tail_tol)) return {std::move(pmf), j0};
    j0 = std::max<std::int64_t>(0, j0 - static_cast<std::int64_t>(10.0 * sd + 20.0));
    j1 += static_cast<std::int64_t>(10.0 * sd + 20.0);
  }
  throw EstimatorError("Poisson oracle window failed to capture the requested mass");
}

}  // namespace

double exact_poisson_expectation(const std::function<double(std::int64_t)>& fn, double lambda,
                                 double tail_tol) {
  const PoissonWindow w = poisson_window(lambda, tail_tol);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < w.pmf.size(); ++i) {
    const std::int64_t j = w.j0 + static_cast<std::int64_t>(i);
    const double v = fn(j);
    if (!std::isfinite(v))
      throw EstimatorError("Poisson oracle: estimator value is not finite at count " +
                           std::to_string(j));
    acc += static_cast<long double>(w.pmf[i]) * static_cast<long double>(v);
  }
  return static_cast<double>(acc);
}

PoissonMoments exact_poisson_moments(const std::function<double(std::int64_t)>& fn, double lambda,
                                     double tail_tol) {
  const PoissonWindow w = poisson_window(lambda, tail_tol);
  std::vector<double> vals(w.pmf.size());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < w.pmf.size(); ++i) {
    const std::int64_t j = w.j0 + static_cast<std::int64_t>(i);
    const double v = fn(j);
    if (!std::isfinite(v))
      throw EstimatorError("Poisson oracle: estimator value is not finite at count " +
                           std::to_string(j));
    vals[i] = v;
    acc += static_cast<long double>(w.pmf[i]) * static_cast<long double>(v);
  }
  PoissonMoments m;
  m.mean = static_cast<double>(acc);
  long double var = 0.0L;
  for (std::size_t i = 0; i < w.pmf.size(); ++i) {
    const long double d = static_cast<long double>(vals[i]) - static_cast<long double>(m.mean);
    var += static_cast<long double>(w.pmf[i]) * d * d;
  }
  m.variance = static_cast<double>(var);
  return m;
}

namespace {

struct OlsOut {
  double slope, intercept;
};

OlsOut ols(const std::vector<double>& lx, const std::vector<double>& ly) {
  const std::size_t m = lx.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double md = static_cast<double>(m);
  const double denom = md * sxx - sx * sx;
  if (denom == 0.0) throw ConfigError("rate fit: covariate values are all identical");
  OlsOut o;
  o.slope = (md * sxy - sx * sy) / denom;
  o.intercept = (sy - o.slope * sx) / md;
  return o;
}

}  // namespace

FitResult fit_log_log(std::span<const double> x, std::span<const double> y, int bootstrap) {
  if (x.size() != y.size()) throw ConfigError("rate fit: x/y length mismatch");
  std::vector<double> lx, ly;
  FitResult fit;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw ConfigError("rate fit: covariate must be positive");
    if (!(y[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 2) throw ConfigError("rate fit: fewer than 2 usable points");
  const OlsOut base = ols(lx, ly);
  fit.slope = base.slope;
  fit.intercept = base.intercept;

  if (bootstrap > 0) {
    std::vector<double> slopes;
    slopes.reserve(static_cast<std::size_t>(bootstrap));
    const std::size_t m = lx.size();
    std::vector<double> bx(m), by(m);
    for (int b = 0; b < bootstrap; ++b) {
      Rng rng = Rng::from(0x5EEDF17ull, static_cast<std::uint64_t>(b));
      bool degenerate = true;
      for (std::size_t i = 0; i < m; ++i) {
        const auto pick = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(m));
        const std::size_t idx = std::min(pick, m - 1);
        bx[i] = lx[idx];
        by[i] = ly[idx];
        if (bx[i] != bx[0]) degenerate = false;
      }
      if (degenerate) continue;  // resample collapsed onto one x value
      slopes.push_back(ols(bx, by).slope);
    }
    if (!slopes.empty()) {
      std::sort(slopes.begin(), slopes.end());
      const auto at = [&](double q) {
        const double pos = q * static_cast<double>(slopes.size() - 1);
        return slopes[static_cast<std::size_t>(std::lround(pos))];
      };
      fit.slope_lo = at(0.025);
      fit.slope_hi = at(0.975);
    } else {
      fit.slope_lo = fit.slope_hi = fit.slope;
    }
  } else {
    fit.slope_lo = fit.slope_hi = fit.slope;
  }
  return fit;
}

FitResult rate_fit(const RiskReport& report, Covariate cov) {
  std::vector<double> x, y;
  for (const auto& c : report.cells) {
    if (c.failed) continue;
    double xv = 0.0;
    switch (cov) {
      case Covariate::n: xv = static_cast<double>(c.n); break;
      case Covariate::k: xv = static_cast<double>(c.k); break;
      case Covariate::n_ln_n:
        xv = static_cast<double>(c.n) * std::log(static_cast<double>(c.n));
        break;
    }
    x.push_back(xv);
    y.push_back(c.mse);
  }
  std::vector<double> distinct = x;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 4) throw ConfigError("rate fit needs at least 4 grid points");
  return fit_log_log(x, y);
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string RiskReport::csv() const {
  std::string out;
  out += "# additive-functional risk report\n";
  out += "# phi=" + phi_id + " mode=" + mode_name(mode) + " C1=" + g17(C1) + " C2=" + g17(C2) +
         " master_seed=" + std::to_string(master_seed) + "\n";
  out += "n,k,dist,mode,trials,bias,var,mse,stderr,seed\n";
  for (const auto& c : cells) {
    if (c.failed) {
      out += std::to_string(c.n) + "," + std::to_string(c.k) + "," + c.dist + "," +
             mode_name(c.mode) + "," + std::to_string(c.trials) + ",nan,nan,nan,nan," +
             std::to_string(c.seed) + "\n";
      continue;
    }
    out += std::to_string(c.n) + "," + std::to_string(c.k) + "," + c.dist + "," +
           mode_name(c.mode) + "," + std::to_string(c.trials) + "," + g17(c.bias) + "," +
           g17(c.variance) + "," + g17(c.mse) + "," + g17(c.stderr_mean) + "," +
           std::to_string(c.seed) + "\n";
  }
  return out;
}

std::string RiskReport::summary_json() const {
  nlohmann::json j;
  j["phi"] = phi_id;
  j["mode"] = mode_name(mode);
  j["C1"] = C1;
  j["C2"] = C2;
  j["master_seed"] = master_seed;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json jc;
    jc["n"] = c.n;
    jc["k"] = c.k;
    jc["dist"] = c.dist;
    jc["mode"] = mode_name(c.mode);
    jc["trials"] = c.trials;
    jc["seed"] = c.seed;
    jc["regime_ratio"] = c.regime_ratio;
    if (c.failed) {
      jc["failed"] = true;
      jc["error"] = c.error;
    } else {
      jc["theta"] = c.theta;
      jc["mean"] = c.mean;
      jc["bias"] = c.bias;
      jc["var"] = c.variance;
      jc["mse"] = c.mse;
      jc["stderr"] = c.stderr_mean;
    }
    j["cells"].push_back(jc);
  }
  // Slopes are reported when a covariate has enough spread to fit.
  for (auto [cov, name] : {std::pair<Covariate, const char*>{Covariate::n, "mse_slope_vs_n"},
                           {Covariate::k, "mse_slope_vs_k"}}) {
    try {
      const FitResult f = rate_fit(*this, cov);
      j[name] = {{"slope", f.slope},
                 {"intercept", f.intercept},
                 {"band", {f.slope_lo, f.slope_hi}},
                 {"excluded", f.excluded}};
    } catch (const ConfigError&) {
    }
  }
  return j.dump(2);
}

RiskReport run_grid(const PhiSpec& spec, const GridSpec& grid, const EstimatorConfig& cfg,
                    std::uint64_t master_seed, PolyCache* cache) {
  if (grid.n_grid.empty() || grid.k_grid.empty() || grid.dists.empty())
    throw ConfigError("simulation grid needs nonempty n, k, and distribution lists");
  if (grid.trials < 2) throw ConfigError("simulation grid needs trials >= 2");

  const auto t0 = std::chrono::steady_clock::now();
  RiskReport report;
  report.phi_id = spec.id;
  report.mode = cfg.mode;
  report.C1 = cfg.C1;
  report.C2 = cfg.C2;
  report.master_seed = master_seed;

  std::uint64_t cell_index = 0;
  for (std::int64_t n : grid.n_grid) {
    for (std::int64_t k : grid.k_grid) {
      for (const std::string& dist : grid.dists) {
        Rng lineage = Rng::from(master_seed, cell_index, 0xCE11);
        const std::uint64_t cell_seed = lineage.next();
        ++cell_index;
        CellStats cell;
        try {
          const ProbabilityVector P = make_dist(dist, k);
          EstimatorConfig cell_cfg = cfg.with_n(n);
          cell = monte_carlo_risk(spec, P, cell_cfg, grid.trials, cell_seed, cache);
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
          cell.n = n;
          cell.k = k;
          cell.mode = cfg.mode;
          cell.trials = grid.trials;
          cell.seed = cell_seed;
        }
        cell.dist = dist;
        report.cells.push_back(std::move(cell));
      }
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

LeCamResult lecam_two_point(const PhiSpec& spec, std::int64_t n, std::int64_t k, double p,
                            double q) {
  if (k < 3) throw ConfigError("two-point construction needs k >= 3");
  if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
    throw ConfigError("two-point construction needs p, q in (0,1)");
  if (n < 1) throw ConfigError("two-point bound needs n >= 1");

  const double km1 = static_cast<double>(k - 1);
  const double theta_p = spec(1.0 - p) + km1 * spec(p / km1);
  const double theta_q = spec(1.0 - q) + km1 * spec(q / km1);

  LeCamResult r;
  r.delta_theta = std::fabs(theta_p - theta_q);
  if (p == q) return r;  // kl = 0, bound = 0: degenerate, not an error
  // KL(P||Q): the k-1 identical tail cells collapse analytically.
  r.kl = (1.0 - p) * std::log((1.0 - p) / (1.0 - q)) + p * std::log(p / q);
  r.chi2_half = (p - q) * (p - q) / (2.0 * p * (1.0 - p));
  r.bound = 0.25 * r.delta_theta * r.delta_theta * std::exp(-static_cast<double>(n) * r.kl);
  return r;
}

}  // namespace addfunc
