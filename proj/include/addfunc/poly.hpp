#pragma once

// Best uniform polynomial approximation and smoothness probes.
//
// remez_best_poly runs a discretized Remez exchange: candidate nodes are
// Chebyshev-distributed in a unit variable u and mapped through
// x = lo + (hi-lo)*u^2, which grades the grid toward lo where the target
// functionals are least smooth. The exchange solves each reference in the
// Chebyshev basis of the interval (stable up to degree 64); monomial
// coefficients are produced at the end because the downstream estimator
// consumes them through factorial moments.

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "addfunc/errors.hpp"
#include "addfunc/phi.hpp"

namespace addfunc {

struct EquiPoint {
  double x;
  double deviation;  // f(x) - p(x)
  int sign;          // sign of deviation
};

struct Polynomial {
  std::vector<double> coeffs;  // monomial basis: coeffs[m] * x^m
  double lo = 0.0, hi = 1.0;
  double sup_error = 0.0;
  // Chebyshev coefficients on [lo,hi] from the exchange; empty when the
  // polynomial was revived from a serialized record. Evaluation prefers this
  // form: the monomial form cancels catastrophically at high degree.
  std::vector<double> cheb;
  std::vector<EquiPoint> certificate;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  double eval(double x) const;           // Clenshaw when cheb is present, else Horner
  double eval_monomial(double x) const;  // Horner on coeffs
  std::string to_json() const;           // {degree, interval, coeffs, sup_error}
  static Polynomial from_json(const std::string& text);
};

struct RemezOptions {
  int max_iter = 100;
  double rel_tol = 1e-6;  // (grid max |err| - levelled |E|) / grid max |err|
  int grid_size = 0;      // 0: max(2048, 64*degree^2)
};

// Convergence failure; carries the best iterate found.
struct RemezError : std::runtime_error {
  RemezError(const std::string& msg, Polynomial best_iterate, double gap_achieved)
      : std::runtime_error(msg), best(std::move(best_iterate)), gap(gap_achieved) {}
  Polynomial best;
  double gap;
};

Polynomial remez_best_poly(const std::function<double(double)>& f, int degree, double lo,
                           double hi, const RemezOptions& opt = {});
Polynomial remez_best_poly(const PhiSpec& spec, int degree, double lo, double hi,
                           const RemezOptions& opt = {});

struct JacksonRow {
  int degree;
  double error;       // E_L(phi, [0, delta])
  double normalized;  // error * (L^2 / delta)^alpha
};

struct JacksonTable {
  double delta = 1.0;
  double alpha = 1.0;
  std::vector<JacksonRow> rows;
  // max/min of the normalized column; 1.0 means a perfect (delta/L^2)^alpha law.
  double ratio() const;
  bool pass(double factor = 5.0) const { return ratio() <= factor; }
};

JacksonTable jackson_rate_probe(const PhiSpec& spec, std::span<const int> degrees, double delta,
                                const RemezOptions& opt = {});

// Grid-restricted moduli of smoothness (lower bounds of the true sup):
//   omega1(f,t) = sup { |f(x)-f(y)|          : x,y in grid, |x-y| <= 2t }
//   omega2(f,t) = sup { |f(x)+f(y)-2f(m)|    : x,y in grid, |x-y| <= 2t, m=(x+y)/2 }
// The midpoint is evaluated directly (it need not be a grid point). The grid
// must be sorted ascending.
double omega1(const std::function<double(double)>& f, double t, std::span<const double> grid);
double omega2(const std::function<double(double)>& f, double t, std::span<const double> grid);

// Process-wide cache of best-approximation polynomials keyed by
// (spec id, degree, interval). When a directory is configured (explicitly or
// via the ADDFUNC_CACHE_DIR environment variable) entries are persisted as
// JSON and survive across runs; estimates computed from a revived entry match
// the original bit for bit because the estimator consumes only the serialized
// monomial coefficients.
class PolyCache {
 public:
  PolyCache();  // honors ADDFUNC_CACHE_DIR when set
  explicit PolyCache(std::optional<std::filesystem::path> dir);

  Polynomial get(const PhiSpec& spec, int degree, double lo, double hi,
                 const RemezOptions& opt = {});

 private:
  std::optional<std::filesystem::path> dir_;
  std::mutex mu_;
  std::vector<std::pair<std::string, Polynomial>> mem_;
};

}  // namespace addfunc
