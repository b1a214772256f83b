#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <addfunc/errors.hpp>
#include <addfunc/phi.hpp>
#include <addfunc/smoothing.hpp>
#include <cmath>

#include "oracles.hpp"

using namespace addfunc;

TEST_CASE("bernstein basis values") {
  CHECK(bernstein_basis(0, 5, 0.0) == 1.0);
  CHECK(bernstein_basis(1, 2, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(bernstein_basis(2, 4, 1.0) == 0.0);
  CHECK(bernstein_basis(4, 4, 1.0) == 1.0);

  double sum = 0.0;
  for (int nu = 0; nu <= 7; ++nu) sum += bernstein_basis(nu, 7, 0.3);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(bernstein_basis(8, 7, 0.3), ConfigError);
  CHECK_THROWS_AS(bernstein_basis(-1, 7, 0.3), ConfigError);
}

TEST_CASE("bernstein derivatives match finite differences") {
  for (int nu : {0, 2, 5}) {
    for (double x : {0.15, 0.5, 0.85}) {
      auto f = [&](double t) { return bernstein_basis(nu, 5, t); };
      const double fd1 = oracle::fd_derivative(f, x, 1e-4);
      CHECK(bernstein_basis_deriv(nu, 5, 1, x) == doctest::Approx(fd1).epsilon(1e-8));
      auto g = [&](double t) { return bernstein_basis_deriv(nu, 5, 1, t); };
      const double fd2 = oracle::fd_derivative(g, x, 1e-4);
      CHECK(bernstein_basis_deriv(nu, 5, 2, x) == doctest::Approx(fd2).epsilon(1e-8));
    }
  }
  // Differentiating past the degree kills the polynomial.
  CHECK(bernstein_basis_deriv(1, 3, 4, 0.4) == 0.0);
}

TEST_CASE("blend matches the target's jet at the anchor") {
  const PhiSpec spec = power_phi(1.2);
  const int L = 6;
  const double a = 0.02, b = 0.01;
  for (int m = 0; m <= L; ++m) {
    const double want = spec.eval(m, a);
    const double got = hermite_interp(spec, L, a, b, m, a);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("blend flattens exactly at the far end") {
  const PhiSpec spec = power_phi(1.2);
  const int L = 6;
  const double a = 0.02, b = 0.01;
  CHECK(hermite_interp(spec, L, a, b, 0, b) == spec.eval(0, a));  // exact
  for (int s = 1; s <= L; ++s) CHECK(hermite_interp(spec, L, a, b, s, b) == 0.0);
}

TEST_CASE("blend value agrees with the direct double sum") {
  const PhiSpec spec = power_phi(1.2);
  auto f = [&](int order, double p) { return spec.eval(order, p); };
  for (double p : {0.011, 0.015, 0.019}) {
    const double want = oracle::hermite_value(f, 6, 0.02, 0.01, p);
    CHECK(hermite_interp(spec, 6, 0.02, 0.01, 0, p) ==
          doctest::Approx(want).epsilon(1e-10));
  }
  // The upper blend direction (b > a) goes through the same formula.
  for (double p : {1.2, 1.5, 1.9}) {
    const double want = oracle::hermite_value(f, 4, 1.0, 2.0, p);
    CHECK(hermite_interp(spec, 4, 1.0, 2.0, 0, p) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("blend derivatives match finite differences") {
  const PhiSpec spec = power_phi(1.2);
  for (int s : {1, 2, 3, 4}) {
    for (double p : {0.012, 0.016}) {
      auto lower = [&](double t) { return hermite_interp(spec, 6, 0.02, 0.01, s - 1, t); };
      const double fd = oracle::fd_derivative(lower, p, 2e-5);
      CHECK(hermite_interp(spec, 6, 0.02, 0.01, s, p) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("blend is linear in the target") {
  const PhiSpec f1 = power_phi(1.2);
  const PhiSpec f2 = power_phi(2.0);
  const double c1 = 0.7, c2 = -2.1;
  auto mixed = [&](int order, double p) {
    return c1 * f1.eval(order, p) + c2 * f2.eval(order, p);
  };
  const PhiSpec mix = custom_phi("mix", 1.2, 6, 0.0, mixed);
  for (double p : {0.012, 0.015, 0.018}) {
    const double direct = hermite_interp(mix, 6, 0.02, 0.01, 0, p);
    const double combined = c1 * hermite_interp(f1, 6, 0.02, 0.01, 0, p) +
                            c2 * hermite_interp(f2, 6, 0.02, 0.01, 0, p);
    CHECK(direct == doctest::Approx(combined).epsilon(1e-12));
  }
}

TEST_CASE("invalid blend arguments are rejected") {
  const PhiSpec spec = power_phi(1.2);
  CHECK_THROWS_AS(hermite_interp(spec, 6, 0.02, 0.02, 0, 0.015), ConfigError);
  CHECK_THROWS_AS(hermite_interp(spec, 0, 0.02, 0.01, 0, 0.015), ConfigError);
  CHECK_THROWS_AS(hermite_interp(spec, 7, 0.02, 0.01, 0, 0.015), ConfigError);
  CHECK_THROWS_AS(hermite_interp(spec, 6, 0.02, 0.01, 7, 0.015), ConfigError);
}

TEST_CASE("smoothed phi pieces") {
  const PhiSpec spec = power_phi(1.2);
  const double delta = 0.1;
  const SmoothedPhi s(spec, 4, delta);

  // Identity piece.
  for (double p : {0.1, 0.3, 0.7, 1.0}) CHECK(s(p) == spec.eval(0, p));
  for (int order : {1, 2, 3, 4})
    CHECK(s.eval(order, 0.5) == spec.eval(order, 0.5));

  // Left plateau takes exactly the anchor value phi(delta).
  CHECK(s(0.0) == spec.eval(0, delta));
  CHECK(s(0.03) == spec.eval(0, delta));
  CHECK(s(delta / 2) == spec.eval(0, delta));
  CHECK(s.eval(2, 0.01) == 0.0);

  // Right plateau holds phi(1).
  CHECK(s(2.0) == spec.eval(0, 1.0));
  CHECK(s(15.0) == spec.eval(0, 1.0));
  CHECK(s.eval(1, 3.0) == 0.0);

  CHECK(s.delta() == delta);
  CHECK(s.L() == 4);
}

TEST_CASE("smoothed phi is continuous through every knot") {
  const PhiSpec spec = power_phi(1.2);
  const SmoothedPhi s(spec, 6, 0.1);
  const double eps = 1e-9;
  for (double knot : {0.05, 0.1, 1.0, 2.0}) {
    const double below = s(knot - eps);
    const double at = s(knot);
    const double above = s(knot + eps);
    CHECK(std::fabs(below - at) <= 1e-6);
    CHECK(std::fabs(above - at) <= 1e-6);
  }
  // First derivative is continuous too (C^L matching).
  for (double knot : {0.05, 0.1, 1.0, 2.0}) {
    const double below = s.eval(1, knot - eps);
    const double above = s.eval(1, knot + eps);
    CHECK(std::fabs(below - above) <= 1e-5);
  }
}

TEST_CASE("smoothed phi constructor guards") {
  const PhiSpec spec = power_phi(1.2);
  CHECK_THROWS_AS(SmoothedPhi(spec, 5, 0.1), ConfigError);
  CHECK_THROWS_AS(SmoothedPhi(spec, 4, 0.0), ConfigError);
  CHECK_THROWS_AS(SmoothedPhi(spec, 4, 0.5), ConfigError);
  PhiSpec shallow = power_phi(1.2);
  shallow.max_order = 4;
  CHECK_THROWS_AS(SmoothedPhi(shallow, 6, 0.1), ConfigError);
  CHECK_NOTHROW(SmoothedPhi(shallow, 4, 0.1));
}

TEST_CASE("derivative envelope of the smoothed function scales with delta") {
  const PhiSpec spec = power_phi(1.2);
  const double deltas[] = {0.02, 0.04, 0.08, 0.16};

  // ell = 4 > alpha: the sup must track delta^(alpha - 4).
  const HermiteBoundTable scaling = hermite_bound_probe(spec, 6, 4, 0.0, deltas);
  CHECK(scaling.rows.size() == 4);
  CHECK(scaling.pass(10.0));
  CHECK(scaling.rows[0].sup > scaling.rows[3].sup);  // smaller delta, wilder derivative

  // ell = 0: values stay bounded regardless of delta (the upper blend may
  // overshoot phi(1) a little before flattening, but never by much).
  const HermiteBoundTable flat = hermite_bound_probe(spec, 6, 0, 0.0, deltas);
  CHECK(flat.pass(10.0));
  for (const auto& row : flat.rows) {
    CHECK(row.sup >= 1.0);
    CHECK(row.sup <= 3.0);
  }

  CHECK_THROWS_AS(hermite_bound_probe(spec, 6, 7, 0.0, deltas), ConfigError);
}
