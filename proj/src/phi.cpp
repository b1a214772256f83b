#include "addfunc/phi.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "addfunc/errors.hpp"
#include "addfunc/reduce.hpp"

namespace addfunc {

namespace {

// Product alpha*(alpha-1)*...*(alpha-order+1); empty product for order 0.
double deriv_coefficient(double alpha, int order) {
  double c = 1.0;
  for (int j = 0; j < order; ++j) c *= alpha - j;
  return c;
}

double power_eval(double alpha, int order, double p) {
  const double coef = deriv_coefficient(alpha, order);
  if (coef == 0.0) return 0.0;  // integer alpha, order > alpha: identically zero
  const double expo = alpha - order;
  if (p == 0.0) {
    if (expo > 0.0) return 0.0;
    if (expo == 0.0) return coef;
    throw std::domain_error("p^alpha derivative of order " + std::to_string(order) +
                            " diverges at p=0 for alpha=" + std::to_string(alpha));
  }
  return coef * std::pow(p, expo);
}

double entropy_eval(int order, double p) {
  if (order == 0) {
    if (p == 0.0) return 0.0;
    return -p * std::log(p);
  }
  if (p == 0.0)
    throw std::domain_error("-p ln p derivative of order " + std::to_string(order) +
                            " diverges at p=0");
  if (order == 1) return -std::log(p) - 1.0;
  // phi^(l)(p) = (-1)^(l-1) (l-2)! p^(1-l) for l >= 2
  double fact = 1.0;
  for (int j = 2; j <= order - 2; ++j) fact *= j;
  const double sign = (order % 2 == 0) ? -1.0 : 1.0;
  return sign * fact * std::pow(p, 1.0 - order);
}

}  // namespace

double PhiSpec::eval(int order, double p) const {
  if (order < 0 || order > max_order)
    throw EstimatorError("derivative order " + std::to_string(order) + " not supported by spec '" +
                         id + "' (max " + std::to_string(max_order) + ")");
  switch (kind) {
    case PhiKind::power:
      return power_eval(alpha, order, p);
    case PhiKind::neg_p_log_p:
      return entropy_eval(order, p);
    case PhiKind::custom:
      if (order == 0 && p == 0.0) return value_at_zero;
      return evaluator(order, p);
  }
  throw EstimatorError("corrupt PhiSpec kind");
}

PhiSpec power_phi(double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("power functional needs alpha > 0");
  PhiSpec s;
  s.kind = PhiKind::power;
  s.id = "power_" + std::to_string(alpha);
  s.alpha = alpha;
  s.max_order = kMaxPhiOrder;
  s.value_at_zero = 0.0;
  if (alpha > 1.0)
    s.deriv1_at_zero = 0.0;
  else if (alpha == 1.0)
    s.deriv1_at_zero = 1.0;
  // else: diverges, leave disengaged
  for (int l = 0; l <= kMaxPhiOrder; ++l) {
    s.W[l] = std::fabs(deriv_coefficient(alpha, l));
    s.c_upper[l] = 0.0;
    s.c_lower[l] = 0.0;
  }
  return s;
}

PhiSpec entropy_phi() {
  PhiSpec s;
  s.kind = PhiKind::neg_p_log_p;
  s.id = "neg_p_log_p";
  s.alpha = 1.0;
  s.max_order = kMaxPhiOrder;
  s.value_at_zero = 0.0;
  s.deriv1_at_zero = std::nullopt;  // -ln p - 1 diverges
  // Order 0: p ln(1/p) <= p + e^-2 and >= p - 1 on (0,1), both tight.
  s.W[0] = 1.0;
  s.c_upper[0] = std::exp(-2.0);
  s.c_lower[0] = 1.0;
  // Order 1: grid-calibrated, see header.
  s.W[1] = 1.0;
  s.c_upper[1] = 12.0;
  s.c_lower[1] = 1.0;
  for (int l = 2; l <= kMaxPhiOrder; ++l) {
    double fact = 1.0;
    for (int j = 2; j <= l - 2; ++j) fact *= j;
    s.W[l] = fact;
    s.c_upper[l] = 0.0;
    s.c_lower[l] = 0.0;
  }
  return s;
}

PhiSpec custom_phi(std::string id, double alpha, int max_order, double value_at_zero,
                   std::function<double(int, double)> evaluator, std::span<const double> W_in,
                   std::span<const double> c_upper_in, std::span<const double> c_lower_in,
                   std::optional<double> deriv1_at_zero) {
  if (max_order < 0 || max_order > kMaxPhiOrder)
    throw ConfigError("custom functional max_order must lie in [0, 6]");
  PhiSpec s;
  s.kind = PhiKind::custom;
  s.id = std::move(id);
  s.alpha = alpha;
  s.max_order = max_order;
  s.value_at_zero = value_at_zero;
  s.deriv1_at_zero = deriv1_at_zero;
  s.evaluator = std::move(evaluator);
  for (std::size_t l = 0; l < W_in.size() && l <= kMaxPhiOrder; ++l) s.W[l] = W_in[l];
  for (std::size_t l = 0; l < c_upper_in.size() && l <= kMaxPhiOrder; ++l) s.c_upper[l] = c_upper_in[l];
  for (std::size_t l = 0; l < c_lower_in.size() && l <= kMaxPhiOrder; ++l) s.c_lower[l] = c_lower_in[l];
  return s;
}

PhiSpec shift_phi(const PhiSpec& spec, double c, std::int64_t k) {
  if (k < 1) throw ConfigError("shift_phi needs k >= 1");
  PhiSpec s = spec;  // copies envelope data and evaluator
  const double offset = 1.0 / static_cast<double>(k);
  PhiSpec base = spec;
  s.kind = PhiKind::custom;
  s.id = spec.id + "+shift" + std::to_string(c) + "_k" + std::to_string(k);
  s.value_at_zero = spec.value_at_zero - c * offset;
  if (spec.deriv1_at_zero) s.deriv1_at_zero = *spec.deriv1_at_zero + c;
  s.evaluator = [base, c, offset](int order, double p) -> double {
    if (order == 0) return base.eval(0, p) + c * (p - offset);
    if (order == 1) return base.eval(1, p) + c;
    return base.eval(order, p);
  };
  // |phi' + c| differs from |phi'| by at most |c|; order 0 by at most |c| * max(1-offset, offset) <= |c|.
  s.c_upper[0] += std::fabs(c);
  s.c_lower[0] += std::fabs(c);
  if (kMaxPhiOrder >= 1) {
    s.c_upper[1] += std::fabs(c);
    s.c_lower[1] += std::fabs(c);
  }
  return s;
}

PhiSpec canonicalized(const PhiSpec& spec, std::int64_t k) {
  if (!spec.deriv1_at_zero || *spec.deriv1_at_zero == 0.0) return spec;
  return shift_phi(spec, -*spec.deriv1_at_zero, k);
}

void ProbabilityVector::validate() const {
  if (p.empty()) throw ConfigError("probability vector is empty");
  double s = 0.0, comp = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ConfigError("probability vector has a negative or NaN entry");
    const double y = v - comp;
    const double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  if (std::fabs(s - 1.0) > 1e-12)
    throw ConfigError("probability vector sums to " + std::to_string(s) + ", not 1");
}

double theta_true(const PhiSpec& spec, const ProbabilityVector& P) {
  P.validate();
  std::vector<double> vals(P.p.size());
  for (std::size_t i = 0; i < P.p.size(); ++i) vals[i] = spec.eval(0, P.p[i]);
  std::sort(vals.begin(), vals.end());
  return serial::block_sum(vals);
}

EnvelopeReport verify_derivative_envelope(const PhiSpec& spec, int order,
                                          std::span<const double> grid) {
  EnvelopeReport rep;
  rep.order = order;
  rep.points_checked = grid.size();
  for (double p : grid) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("envelope grid points must lie in (0,1)");
    const double d = std::fabs(spec.eval(order, p));
    const double envelope = spec.W[order] * std::pow(p, spec.alpha - order);
    const double lower = envelope - spec.c_lower[order];
    const double upper = envelope + spec.c_upper[order];
    const double slack = 1e-12 * (1.0 + std::fabs(upper));
    if (d < lower - slack || d > upper + slack) rep.violations.push_back({p, d, lower, upper});
  }
  return rep;
}

double holder_constant_probe(const PhiSpec& spec, int order, double exponent,
                             std::span<const double> grid) {
  if (!(exponent > 0.0 && exponent <= 1.0)) throw ConfigError("Holder exponent must lie in (0,1]");
  if (order != 0 && order != 1) throw ConfigError("holder_constant_probe probes phi or phi'");
  const std::int64_t g = static_cast<std::int64_t>(grid.size());
  if (g < 2) throw ConfigError("Holder probe needs at least two grid points");
  std::vector<double> f(static_cast<std::size_t>(g));
  for (std::int64_t i = 0; i < g; ++i) f[static_cast<std::size_t>(i)] = spec.eval(order, grid[static_cast<std::size_t>(i)]);
  return par::map_max(g, [&](std::int64_t i) {
    double m = 0.0;
    for (std::int64_t j = i + 1; j < g; ++j) {
      const double dx = std::fabs(grid[static_cast<std::size_t>(j)] - grid[static_cast<std::size_t>(i)]);
      if (dx == 0.0) continue;
      const double q = std::fabs(f[static_cast<std::size_t>(j)] - f[static_cast<std::size_t>(i)]) / std::pow(dx, exponent);
      if (q > m) m = q;
    }
    return m;
  });
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw ConfigError("bad log_grid parameters");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < points; ++i)
    g[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (!(hi >= lo) || points < 2) throw ConfigError("bad linear_grid parameters");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  g.back() = hi;
  return g;
}

}  // namespace addfunc
