#pragma once

// Smooth extension machinery. The bias-corrected estimators apply a
// polynomial-blend surgery to phi near the ends of its useful range: the
// function is replaced by a one-sided Hermite interpolant that matches phi's
// value and first L derivatives at an anchor point and flattens toward the
// far end of the blend window. The result stays L-times differentiable while
// becoming constant outside the statistically identifiable range.

#include <span>
#include <vector>

#include "addfunc/phi.hpp"

namespace addfunc {

// Bernstein basis polynomial B_{nu,n}(x) = C(n,nu) x^nu (1-x)^{n-nu}.
// Binomials are built with exact integer arithmetic (n stays small here), so
// repeated evaluation is bit-reproducible.
double bernstein_basis(int nu, int n, double x);

// s-th derivative of B_{nu,n} at x via the falling-factorial recursion
//   B_{nu,n}^{(s)}(x) = (n)_s * sum_j (-1)^j C(s,j) B_{nu-s+j, n-s}(x),
// with out-of-range basis indices contributing zero.
double bernstein_basis_deriv(int nu, int n, int s, double x);

// One-sided Hermite blend of order L anchored at a, flattening toward b
// (a != b; either side may be the larger). Matches phi's value and first L
// derivatives at a; at b the value settles to phi(a) and derivatives 1..L
// vanish:
//
//   H_L(p) = phi(a) + sum_{m=1}^{L} phi^(m)(a)/m! (p-a)^m
//            * sum_{l=0}^{L-m} (L+1)/(L+l+1) B_{l,L+l+1}((p-a)/(b-a))
//
// `order` selects the derivative of H_L to evaluate (0 = value); derivatives
// are computed from the differentiated closed-form sum, not finite
// differences, because callers need order-4 values at small arguments.
double hermite_interp(const PhiSpec& spec, int L, double a, double b, int order, double p);

// phi with both ends replaced by blends, producing an L-smooth function on
// [0, +inf) that is constant below delta/2 and above 2:
//   [0, delta/2]     constant (left blend evaluated at delta/2)
//   (delta/2, delta) blend anchored at delta, flattening toward delta/2
//   [delta, 1]       phi itself
//   (1, 2)           blend anchored at 1, flattening toward 2
//   [2, +inf)        constant phi(1)
class SmoothedPhi {
 public:
  SmoothedPhi(PhiSpec spec, int L, double delta);

  double operator()(double p) const { return eval(0, p); }
  // Derivative orders up to L are available everywhere; piece boundaries are
  // C^L by the Hermite matching conditions.
  double eval(int order, double p) const;

  double delta() const { return delta_; }
  int L() const { return L_; }
  const PhiSpec& spec() const { return spec_; }

 private:
  PhiSpec spec_;
  int L_;
  double delta_;
  double const_left_;   // value on [0, delta/2]
  double const_right_;  // value on [2, inf)
};

struct HermiteBoundRow {
  double delta = 0.0;
  double sup = 0.0;         // grid sup of p^beta |H^(ell)(p)|
  double normalized = 0.0;  // sup / delta^(alpha+beta-ell), or sup itself when ell <= alpha+beta
};

struct HermiteBoundTable {
  int ell = 0;
  double beta = 0.0;
  std::vector<HermiteBoundRow> rows;
  double ratio() const;  // max/min of the normalized column
  bool pass(double factor = 10.0) const { return ratio() <= factor; }
};

// Scaling probe for the derivative envelope of the smoothed function: for
// each delta in the sweep, builds SmoothedPhi(spec, L, delta) and takes a
// grid sup of p^beta |H^(ell)(p)| over p > 0. In the ell > alpha+beta branch
// the sup should track delta^(alpha+beta-ell), so the normalized column
// should stay within a bounded factor across the sweep.
HermiteBoundTable hermite_bound_probe(const PhiSpec& spec, int L, int ell, double beta,
                                      std::span<const double> deltas, int grid_points = 2000);

}  // namespace addfunc
