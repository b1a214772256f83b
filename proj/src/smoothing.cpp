#include "addfunc/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "addfunc/errors.hpp"

namespace addfunc {

namespace {

// Exact integer binomial; n <= 2L+1 <= 13 in this module, far from overflow.
double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  std::uint64_t num = 1, den = 1;
  k = std::min(k, n - k);
  for (int j = 1; j <= k; ++j) {
    num *= static_cast<std::uint64_t>(n - k + j);
    den *= static_cast<std::uint64_t>(j);
  }
  return static_cast<double>(num / den);
}

double falling(int n, int s) {
  double v = 1.0;
  for (int j = 0; j < s; ++j) v *= n - j;
  return v;
}

// Basis value with out-of-range indices treated as zero (the derivative
// recursion shifts indices below 0 / above n-s).
double basis_or_zero(int nu, int n, double x) {
  if (nu < 0 || nu > n || n < 0) return 0.0;
  return binom(n, nu) * std::pow(x, nu) * std::pow(1.0 - x, n - nu);
}

}  // namespace

double bernstein_basis(int nu, int n, double x) {
  if (n < 0 || nu < 0 || nu > n) throw ConfigError("bernstein_basis index out of range");
  return basis_or_zero(nu, n, x);
}

double bernstein_basis_deriv(int nu, int n, int s, double x) {
  if (n < 0 || nu < 0 || nu > n) throw ConfigError("bernstein_basis_deriv index out of range");
  if (s < 0) throw ConfigError("bernstein_basis_deriv needs s >= 0");
  if (s == 0) return basis_or_zero(nu, n, x);
  if (s > n) return 0.0;
  double sum = 0.0;
  for (int j = 0; j <= s; ++j) {
    const double term = binom(s, j) * basis_or_zero(nu - s + j, n - s, x);
    sum += (j % 2 == 0) ? term : -term;
  }
  return falling(n, s) * sum;
}

namespace {

// Tail weight S_m(x) = sum_{l=0}^{L-m} (L+1)/(L+l+1) B_{l,L+l+1}(x), or its
// s-th derivative.
double tail_weight(int L, int m, double x, int s) {
  double sum = 0.0;
  for (int l = 0; l <= L - m; ++l) {
    const int n = L + l + 1;
    if (s > n) continue;
    const double w = static_cast<double>(L + 1) / static_cast<double>(n);
    if (s == 0) {
      sum += w * basis_or_zero(l, n, x);
    } else {
      double inner = 0.0;
      for (int j = 0; j <= s; ++j) {
        const double term = binom(s, j) * basis_or_zero(l - s + j, n - s, x);
        inner += (j % 2 == 0) ? term : -term;
      }
      sum += w * falling(n, s) * inner;
    }
  }
  return sum;
}

}  // namespace

double hermite_interp(const PhiSpec& spec, int L, double a, double b, int order, double p) {
  if (a == b) throw ConfigError("hermite_interp needs distinct anchor and flat end");
  if (L < 1 || L > spec.max_order)
    throw ConfigError("hermite_interp order exceeds the function's derivative support");
  if (order < 0 || order > L) throw ConfigError("hermite_interp derivative order must be in [0, L]");
  const double h = b - a;
  const double x = (p - a) / h;
  double sum = (order == 0) ? spec.eval(0, a) : 0.0;
  // d^s/dp^s [ (p-a)^m S_m((p-a)/h) ] by Leibniz; the polynomial factor kills
  // terms differentiated more than m times.
  for (int m = 1; m <= L; ++m) {
    const double cm = spec.eval(m, a) / std::tgamma(m + 1.0);
    double term = 0.0;
    for (int j = 0; j <= order && j <= m; ++j) {
      const double poly_part = falling(m, j) * std::pow(p - a, m - j);
      const double tail_part = tail_weight(L, m, x, order - j) / std::pow(h, order - j);
      term += binom(order, j) * poly_part * tail_part;
    }
    sum += cm * term;
  }
  return sum;
}

SmoothedPhi::SmoothedPhi(PhiSpec spec, int L, double delta)
    : spec_(std::move(spec)), L_(L), delta_(delta) {
  if (L != 4 && L != 6) throw ConfigError("SmoothedPhi supports blend order 4 or 6");
  if (!(delta > 0.0) || !(delta < 0.5)) throw ConfigError("SmoothedPhi needs delta in (0, 0.5)");
  if (spec_.max_order < L)
    throw ConfigError("SmoothedPhi: function must expose derivatives up to the blend order");
  const_left_ = hermite_interp(spec_, L_, delta_, delta_ / 2.0, 0, delta_ / 2.0);
  const_right_ = spec_.eval(0, 1.0);
}

double SmoothedPhi::eval(int order, double p) const {
  if (order < 0 || order > L_) throw ConfigError("SmoothedPhi derivative order out of range");
  if (p <= delta_ / 2.0) return order == 0 ? const_left_ : 0.0;
  if (p < delta_) return hermite_interp(spec_, L_, delta_, delta_ / 2.0, order, p);
  if (p <= 1.0) return spec_.eval(order, p);
  if (p < 2.0) return hermite_interp(spec_, L_, 1.0, 2.0, order, p);
  return order == 0 ? const_right_ : 0.0;
}

double HermiteBoundTable::ratio() const {
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
  for (const auto& r : rows) {
    mn = std::min(mn, r.normalized);
    mx = std::max(mx, r.normalized);
  }
  return rows.empty() || mn <= 0.0 ? std::numeric_limits<double>::infinity() : mx / mn;
}

HermiteBoundTable hermite_bound_probe(const PhiSpec& spec, int L, int ell, double beta,
                                      std::span<const double> deltas, int grid_points) {
  if (ell < 0 || ell > L) throw ConfigError("hermite_bound_probe needs 0 <= ell <= L");
  if (grid_points < 16) throw ConfigError("hermite_bound_probe needs a denser grid");
  HermiteBoundTable table;
  table.ell = ell;
  table.beta = beta;
  const bool scaling_branch = static_cast<double>(ell) > spec.alpha + beta;
  for (double delta : deltas) {
    SmoothedPhi sm(spec, L, delta);
    // Log-spaced sweep from below delta/2 up to past the flat tail; the sup
    // for ell > alpha+beta lives near p ~ delta so the log grid keeps it
    // resolved for every delta in the sweep.
    const double lo = delta / 8.0, hi = 2.25;
    double sup = 0.0;
    for (int i = 0; i < grid_points; ++i) {
      const double p = lo * std::pow(hi / lo, static_cast<double>(i) / (grid_points - 1));
      const double v = std::pow(p, beta) * std::fabs(sm.eval(ell, p));
      if (v > sup) sup = v;
    }
    HermiteBoundRow row;
    row.delta = delta;
    row.sup = sup;
    row.normalized =
        scaling_branch ? sup / std::pow(delta, spec.alpha + beta - ell) : sup;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace addfunc
