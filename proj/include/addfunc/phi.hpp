#pragma once

// Functionals phi and their derivative-growth envelopes.
//
// A PhiSpec bundles a smooth map phi : [0,1] -> R with exact derivatives up to
// max_order and the envelope data (alpha, W_l, c_l, c'_l) asserting, for
// p in (0,1),
//
//   W_l * p^(alpha-l) - c'_l  <=  |phi^(l)(p)|  <=  W_l * p^(alpha-l) + c_l.
//
// The exponent alpha drives every tuning knob downstream (polynomial degrees,
// truncation bounds, risk envelopes). Specs are immutable once built and can
// be shared freely across threads.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace addfunc {

inline constexpr int kMaxPhiOrder = 6;

enum class PhiKind { power, neg_p_log_p, custom };

struct PhiSpec {
  PhiKind kind = PhiKind::custom;
  std::string id;  // stable identifier, used as the polynomial cache key
  double alpha = 1.0;
  int max_order = kMaxPhiOrder;
  double value_at_zero = 0.0;
  // phi'(0) when it is finite; disengaged when phi'(0) diverges or is unknown.
  std::optional<double> deriv1_at_zero;
  // Envelope constants, indexed by derivative order 0..kMaxPhiOrder.
  std::array<double, kMaxPhiOrder + 1> W{};
  std::array<double, kMaxPhiOrder + 1> c_upper{};
  std::array<double, kMaxPhiOrder + 1> c_lower{};
  // Evaluator for custom kinds: (order, p) -> phi^(order)(p). Built-ins use
  // closed forms and leave this empty.
  std::function<double(int, double)> evaluator;

  // phi^(order)(p). Throws EstimatorError for order > max_order and
  // std::domain_error when the requested derivative diverges at p=0.
  double eval(int order, double p) const;
  double operator()(double p) const { return eval(0, p); }
};

// phi(p) = p^alpha, alpha > 0. Exact envelopes: W_l = |alpha (alpha-1) ... (alpha-l+1)|.
PhiSpec power_phi(double alpha);

// phi(p) = -p ln p (phi(0) = 0).
//
// Envelopes: orders l >= 2 are exact with W_l = (l-2)!, c = c' = 0 and
// alpha = 1. Order 0 holds globally with W0=1, c0=e^-2, c'0=1. Order 1 cannot
// be sandwiched globally (|ln p + 1| is unbounded while W1*p^0 is constant);
// the shipped constants W1=1, c1=12, c'1=1 are calibrated to hold on the
// standard verification grid [1e-6, 1].
PhiSpec entropy_phi();

PhiSpec custom_phi(std::string id, double alpha, int max_order, double value_at_zero,
                   std::function<double(int, double)> evaluator,
                   std::span<const double> W_in = {}, std::span<const double> c_upper_in = {},
                   std::span<const double> c_lower_in = {},
                   std::optional<double> deriv1_at_zero = std::nullopt);

// phi_c(p) = phi(p) + c*(p - 1/k). Leaves theta(P; phi) unchanged for every
// P on k symbols since sum_i (p_i - 1/k) = 0.
PhiSpec shift_phi(const PhiSpec& spec, double c, std::int64_t k);

// Subtracts phi'(0)*(p - 1/k) so the result has phi'(0) = 0, whenever phi'(0)
// is finite. No-op when phi'(0) is zero, divergent, or unknown. Estimators
// apply this on entry; theta is invariant either way.
PhiSpec canonicalized(const PhiSpec& spec, std::int64_t k);

struct ProbabilityVector {
  std::vector<double> p;
  std::int64_t k() const { return static_cast<std::int64_t>(p.size()); }
  // Entries nonnegative, |sum - 1| <= 1e-12. Throws ConfigError.
  void validate() const;
};

// theta(P; phi) = sum_i phi(p_i). Summed in sorted order, so the value is
// exactly permutation-invariant.
double theta_true(const PhiSpec& spec, const ProbabilityVector& P);

struct EnvelopeViolation {
  double p;
  double deriv_abs;
  double lower, upper;
};

struct EnvelopeReport {
  int order = 0;
  std::size_t points_checked = 0;
  std::vector<EnvelopeViolation> violations;
  bool pass() const { return violations.empty(); }
};

// Checks the declared envelope sandwich for phi^(order) on the given grid
// (grid points must lie in (0,1)).
EnvelopeReport verify_derivative_envelope(const PhiSpec& spec, int order,
                                          std::span<const double> grid);

// Largest pairwise Holder-`exponent` quotient of phi^(order) over the grid:
//   max_{x != y} |f(x) - f(y)| / |x - y|^exponent.
// A grid-restricted lower bound on the true Holder constant. order is 0 or 1.
double holder_constant_probe(const PhiSpec& spec, int order, double exponent,
                             std::span<const double> grid);

// Log-spaced grid helper, endpoints included. lo, hi > 0.
std::vector<double> log_grid(double lo, double hi, int points);
// Linearly spaced grid, endpoints included.
std::vector<double> linear_grid(double lo, double hi, int points);

}  // namespace addfunc
