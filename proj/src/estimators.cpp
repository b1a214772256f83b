#include "addfunc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "addfunc/errors.hpp"
#include "addfunc/reduce.hpp"

namespace addfunc {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::hybrid4: return "hybrid4";
    case Mode::hybrid2: return "hybrid2";
    case Mode::plugin: return "plugin";
    case Mode::plugin2: return "plugin2";
    case Mode::plugin4: return "plugin4";
    case Mode::poly_only: return "poly_only";
  }
  return "?";
}

Mode mode_from_name(const std::string& name) {
  for (Mode m : {Mode::hybrid4, Mode::hybrid2, Mode::plugin, Mode::plugin2, Mode::plugin4,
                 Mode::poly_only})
    if (name == mode_name(m)) return m;
  throw ConfigError("unknown estimator mode '" + name + "'");
}

double EstimatorConfig::delta_count() const {
  return n < 1 ? 0.0 : C2 * std::log(static_cast<double>(n));
}
double EstimatorConfig::delta_prob() const { return delta_count() / static_cast<double>(n); }

int EstimatorConfig::degree() const {
  if (n < 2) return 1;
  const int L = static_cast<int>(std::floor(C1 * std::log(static_cast<double>(n))));
  return std::max(1, L);
}

double EstimatorConfig::poly_hi() const { return 4.0 * delta_prob(); }

double EstimatorConfig::threshold() const {
  if (threshold_count_override) return *threshold_count_override;
  return 2.0 * delta_count();
}

EstimatorConfig EstimatorConfig::with_n(std::int64_t nn) const {
  EstimatorConfig c = *this;
  c.n = nn;
  return c;
}

namespace {

bool uses_poly_branch(Mode m) {
  return m == Mode::hybrid4 || m == Mode::hybrid2 || m == Mode::poly_only;
}

bool uses_smoothing(Mode m) {
  return m == Mode::hybrid4 || m == Mode::hybrid2 || m == Mode::plugin2 || m == Mode::plugin4;
}

int blend_order(Mode m) {
  return (m == Mode::hybrid4 || m == Mode::plugin4 || m == Mode::poly_only) ? 6 : 4;
}

}  // namespace

std::vector<std::string> EstimatorConfig::validate(double alpha) const {
  if (!(C1 > 0.0) || !(C2 > 0.0)) throw ConfigError("C1 and C2 must be positive");
  if (mode != Mode::plugin && n < 3)
    throw ConfigError("bias-corrected and polynomial branches need n >= 3");
  if (uses_poly_branch(mode) || uses_smoothing(mode)) {
    if (poly_hi() > 1.0)
      throw ConfigError("approximation interval [0, 4*C2*ln(n)/n] escapes [0,1]; increase n or lower C2");
  }
  if (!force) {
    if (mode == Mode::hybrid4 && !(alpha > 1.0 && alpha < 1.5))
      throw ConfigError("hybrid4 is tuned for growth exponent in (1, 1.5); pass force to override");
    if (mode == Mode::hybrid2 && !(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("hybrid2 is tuned for growth exponent in (0, 1); pass force to override");
  }
  if (strict_theory) {
    const double lhs = 6.0 * C1 * std::log(2.0) + 4.0 * std::sqrt(C1 * C2) * (1.0 + std::log(2.0));
    if (lhs > 3.0 - 2.0 * alpha)
      throw ConfigError("strict_theory: 6*C1*ln2 + 4*sqrt(C1*C2)*(1+ln2) must be <= 3 - 2*alpha");
    if (!(C2 > 16.0 * alpha)) throw ConfigError("strict_theory: C2 must exceed 16*alpha");
  }
  std::vector<std::string> warnings;
  const double dc = delta_count();
  if (uses_poly_branch(mode) && 2.0 * dc * dc * dc * degree() > static_cast<double>(n)) {
    warnings.push_back("variance-control window 2*delta_count^3*L <= n does not hold at this n");
  }
  return warnings;
}

double plugin_estimate(const PhiSpec& spec, const Histogram& hist) {
  const std::int64_t k = hist.k();
  if (k == 0) throw EstimatorError("plugin_estimate: empty histogram");
  std::int64_t denom = hist.n;
  if (hist.regime == Regime::multinomial) {
    if (denom == 0) throw EstimatorError("plugin_estimate: no samples (n = 0)");
  } else {
    denom = std::max<std::int64_t>(hist.total(), 1);
  }
  const PhiSpec phi = canonicalized(spec, k);
  const double nd = static_cast<double>(denom);
  return par::map_sum(k, [&](std::int64_t i) {
    return phi(static_cast<double>(hist.counts[static_cast<std::size_t>(i)]) / nd);
  });
}

std::uint64_t falling_factorial(std::uint64_t N, std::uint64_t m) {
  if (m > N) return 0;
  std::uint64_t out = 1;
  for (std::uint64_t j = 0; j < m; ++j) {
    const std::uint64_t factor = N - j;
    if (factor != 0 && out > std::numeric_limits<std::uint64_t>::max() / factor)
      throw EstimatorError("falling_factorial overflows 64 bits");
    out *= factor;
  }
  return out;
}

std::pair<double, double> phi_range(const PhiSpec& spec, double lo, double hi, int points) {
  if (!(hi >= lo)) throw ConfigError("phi_range needs hi >= lo");
  if (points < 2) throw ConfigError("phi_range needs at least two grid points");
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  for (int i = 0; i < points; ++i) {
    const double u = static_cast<double>(i) / (points - 1);
    const double v = spec.eval(0, lo + (hi - lo) * u * u);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return {mn, mx};
}

BestPolyEstimator::BestPolyEstimator(Polynomial poly, std::int64_t n, double phi_inf,
                                     double phi_sup)
    : poly_(std::move(poly)), n_(n), inf_(phi_inf), sup_(phi_sup) {
  if (n_ < 1) throw ConfigError("BestPolyEstimator needs n >= 1");
  if (!(inf_ <= sup_)) throw ConfigError("BestPolyEstimator needs phi_inf <= phi_sup");
}

BestPolyEstimator BestPolyEstimator::build(const PhiSpec& spec, const EstimatorConfig& cfg,
                                           PolyCache* cache) {
  const double hi = cfg.poly_hi();
  const int L = cfg.degree();
  Polynomial poly =
      cache ? cache->get(spec, L, 0.0, hi) : remez_best_poly(spec, L, 0.0, hi);
  const auto [mn, mx] = phi_range(spec, 0.0, cfg.delta_prob());
  return BestPolyEstimator(std::move(poly), cfg.n, mn, mx);
}

double BestPolyEstimator::raw(std::int64_t N) const {
  // sum_m a_m * prod_{j<m} (N-j)/n. The running product introduces one
  // moderate ratio per step, so coefficients of size ~64^L never meet a bare
  // N^m; Kahan compensation keeps the alternating sum honest.
  const double nd = static_cast<double>(n_);
  double sum = 0.0, comp = 0.0, prod = 1.0;
  for (std::size_t m = 0; m < poly_.coeffs.size(); ++m) {
    if (m > 0) {
      prod *= static_cast<double>(N - static_cast<std::int64_t>(m) + 1) / nd;
      if (prod == 0.0) break;  // N < m: this and all later factorial terms vanish
    }
    const double y = poly_.coeffs[m] * prod - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double BestPolyEstimator::operator()(std::int64_t N) const {
  return std::clamp(raw(N), inf_, sup_);
}

double bias_corrected2(const SmoothedPhi& s, std::int64_t N, std::int64_t n) {
  const double nd = static_cast<double>(n);
  const double x = static_cast<double>(N) / nd;
  return s.eval(0, x) - static_cast<double>(N) / (2.0 * nd * nd) * s.eval(2, x);
}

double bias_corrected4(const SmoothedPhi& s, std::int64_t N, std::int64_t n) {
  const double nd = static_cast<double>(n);
  const double Nd = static_cast<double>(N);
  const double x = Nd / nd;
  const double n2 = nd * nd, n3 = n2 * nd, n4 = n3 * nd;
  const double H2 = s.eval(2, x), H3 = s.eval(3, x), H4 = s.eval(4, x);
  return s.eval(0, x) - Nd / (2.0 * n2) * H2 + Nd / (3.0 * n3) * H3 - Nd / (4.0 * n4) * H4 +
         Nd * Nd / (8.0 * n4) * H4;
}

namespace {

EstimateResult hybrid_impl(const PhiSpec& raw_spec, const SplitHistograms& split,
                           const EstimatorConfig& cfg_in, PolyCache* cache) {
  if (split.primary.k() != split.selector.k())
    throw ConfigError("split histograms disagree on alphabet size");
  const std::int64_t k = split.primary.k();
  if (k == 0) throw EstimatorError("hybrid estimate: empty histograms");

  EstimatorConfig cfg = cfg_in.with_n(split.base_n);
  if (cfg.k == 0) cfg.k = k;
  const PhiSpec spec = canonicalized(raw_spec, k);

  EstimateResult res;
  res.mode = cfg.mode;
  res.warnings = cfg.validate(spec.alpha);
  res.delta_count = cfg.delta_count();
  res.degree = cfg.degree();

  const double thr = cfg.threshold();
  const bool any_plugin = std::isfinite(thr);

  std::optional<SmoothedPhi> smooth;
  if (any_plugin) smooth.emplace(spec, blend_order(cfg.mode), cfg.delta_prob());
  const bool fourth = blend_order(cfg.mode) == 6;
  const BestPolyEstimator poly = BestPolyEstimator::build(spec, cfg, cache);

  const auto& prim = split.primary.counts;
  const auto& sel = split.selector.counts;
  res.plugin_branch = static_cast<std::int64_t>(par::map_sum(k, [&](std::int64_t i) {
    return static_cast<double>(sel[static_cast<std::size_t>(i)]) >= thr ? 1.0 : 0.0;
  }));
  res.poly_branch = k - res.plugin_branch;
  res.value = par::map_sum(k, [&](std::int64_t i) {
    const std::int64_t N = prim[static_cast<std::size_t>(i)];
    if (static_cast<double>(sel[static_cast<std::size_t>(i)]) >= thr)
      return fourth ? bias_corrected4(*smooth, N, cfg.n) : bias_corrected2(*smooth, N, cfg.n);
    return poly(N);
  });
  return res;
}

EstimateResult plugin_family(const PhiSpec& raw_spec, const Histogram& hist,
                             const EstimatorConfig& cfg_in) {
  const std::int64_t k = hist.k();
  EstimatorConfig cfg = cfg_in;
  cfg.n = hist.n;  // the data defines the budget
  if (cfg.k == 0) cfg.k = k;

  const PhiSpec spec = canonicalized(raw_spec, k);
  EstimateResult res;
  res.mode = cfg.mode;
  res.warnings = cfg.validate(spec.alpha);
  res.delta_count = cfg.delta_count();
  res.degree = cfg.degree();
  res.plugin_branch = k;

  if (cfg.mode == Mode::plugin) {
    res.value = plugin_estimate(spec, hist);
    return res;
  }
  // Bias-corrected plugins: the correction formula is calibrated to Poisson
  // counts at intensity n, so the declared budget is used in both regimes.
  SmoothedPhi smooth(spec, blend_order(cfg.mode), cfg.delta_prob());
  const bool fourth = cfg.mode == Mode::plugin4;
  res.value = par::map_sum(k, [&](std::int64_t i) {
    const std::int64_t N = hist.counts[static_cast<std::size_t>(i)];
    return fourth ? bias_corrected4(smooth, N, cfg.n) : bias_corrected2(smooth, N, cfg.n);
  });
  return res;
}

}  // namespace

EstimateResult hybrid_estimate(const PhiSpec& spec, const SplitHistograms& split,
                               const EstimatorConfig& cfg, PolyCache* cache) {
  if (!uses_poly_branch(cfg.mode))
    throw ConfigError("hybrid_estimate handles hybrid4, hybrid2, or poly_only modes");
  EstimatorConfig c = cfg;
  if (c.mode == Mode::poly_only && !c.threshold_count_override)
    c.threshold_count_override = std::numeric_limits<double>::infinity();
  return hybrid_impl(spec, split, c, cache);
}

EstimateResult estimate(const PhiSpec& spec, const SplitHistograms& split,
                        const EstimatorConfig& cfg, PolyCache* cache) {
  if (uses_poly_branch(cfg.mode)) return hybrid_estimate(spec, split, cfg, cache);
  EstimatorConfig c = cfg.with_n(split.base_n);
  return plugin_family(spec, split.primary, c);
}

EstimateResult estimate(const PhiSpec& spec, const Histogram& hist, const EstimatorConfig& cfg,
                        PolyCache* cache) {
  if (!uses_poly_branch(cfg.mode)) return plugin_family(spec, hist, cfg);

  // Unsplit data: thin each count Bin(N, 1/2) into two synthetic halves. Each
  // half of a Poisson(n p) count is Poisson(n p / 2), so the effective budget
  // per half is n / 2; multinomial data are treated the same way.
  const std::int64_t n_eff = hist.n / 2;
  if (n_eff < 3) throw ConfigError("histogram too small to split for the hybrid estimator");
  SplitHistograms split;
  split.base_n = n_eff;
  split.primary.regime = Regime::poissonized;
  split.primary.n = n_eff;
  split.selector.regime = Regime::poissonized;
  split.selector.n = n_eff;
  const std::int64_t k = hist.k();
  split.primary.counts.resize(static_cast<std::size_t>(k));
  split.selector.counts.resize(static_cast<std::size_t>(k));
  Rng rng = Rng::from(cfg.seed, 0, 0x7457);
  for (std::int64_t i = 0; i < k; ++i) {
    const std::int64_t N = hist.counts[static_cast<std::size_t>(i)];
    const std::int64_t half = rng.binomial_half(N);
    split.primary.counts[static_cast<std::size_t>(i)] = half;
    split.selector.counts[static_cast<std::size_t>(i)] = N - half;
  }
  return hybrid_estimate(spec, split, cfg, cache);
}

}  // namespace addfunc
