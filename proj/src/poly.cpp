#include "addfunc/poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <Eigen/Dense>

#include "addfunc/io.hpp"
#include "addfunc/reduce.hpp"
#include "json.hpp"

namespace addfunc {

namespace {

// Clenshaw evaluation of sum_m c[m] T_m(s), s in [-1,1].
double clenshaw(const std::vector<double>& c, double s) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t m = c.size(); m-- > 1;) {
    const double b0 = 2.0 * s * b1 - b2 + c[m];
    b2 = b1;
    b1 = b0;
  }
  return s * b1 - b2 + (c.empty() ? 0.0 : c[0]);
}

double to_unit(double x, double lo, double hi) { return (2.0 * x - (lo + hi)) / (hi - lo); }

struct ExchangeGrid {
  std::vector<double> x;   // ascending in [lo, hi]
  std::vector<double> fx;  // f(x)
};

// Chebyshev-distributed nodes in u, graded toward lo through x = lo + (hi-lo) u^2.
ExchangeGrid build_grid(const std::function<double(double)>& f, double lo, double hi, int m) {
  ExchangeGrid g;
  g.x.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double u = 0.5 * (1.0 - std::cos(M_PI * j / (m - 1)));
    g.x[static_cast<std::size_t>(j)] = lo + (hi - lo) * u * u;
  }
  g.x.front() = lo;
  g.x.back() = hi;
  g.x.erase(std::unique(g.x.begin(), g.x.end()), g.x.end());
  g.fx.resize(g.x.size());
  par::map_fill(static_cast<std::int64_t>(g.x.size()), g.fx.data(),
                [&](std::int64_t j) { return f(g.x[static_cast<std::size_t>(j)]); });
  return g;
}

struct Reference {
  std::vector<std::size_t> idx;  // L+2 ascending grid indices
};

Reference initial_reference(const ExchangeGrid& g, int degree, double lo, double hi) {
  const int m = degree + 2;
  Reference ref;
  ref.idx.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    // Chebyshev points in u, not in u^2: extrema of the error cluster
    // quadratically at the endpoints, and over-clustering the start toward lo
    // makes the levelled solve numerically singular at high degree.
    const double u = std::sin(0.5 * M_PI * i / (m - 1));
    const double target = lo + (hi - lo) * u * u;
    const auto it = std::lower_bound(g.x.begin(), g.x.end(), target);
    std::size_t j = static_cast<std::size_t>(it - g.x.begin());
    if (j >= g.x.size()) j = g.x.size() - 1;
    ref.idx.push_back(j);
  }
  // Deduplicate while keeping strictly increasing indices.
  for (std::size_t i = 1; i < ref.idx.size(); ++i)
    if (ref.idx[i] <= ref.idx[i - 1]) ref.idx[i] = ref.idx[i - 1] + 1;
  while (ref.idx.back() >= g.x.size()) {
    for (auto& j : ref.idx) --j;  // cannot underflow: grid size >= degree+2 enforced upstream
  }
  return ref;
}

struct LevelSolve {
  std::vector<double> cheb;
  double levelled = 0.0;  // signed E
};

LevelSolve solve_reference(const ExchangeGrid& g, const Reference& ref, int degree, double lo,
                           double hi) {
  const int m = degree + 2;
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    const double s = to_unit(g.x[ref.idx[static_cast<std::size_t>(i)]], lo, hi);
    double t0 = 1.0, t1 = s;
    for (int col = 0; col <= degree; ++col) {
      if (col == 0)
        A(i, col) = 1.0;
      else if (col == 1)
        A(i, col) = s;
      else {
        const double t2 = 2.0 * s * t1 - t0;
        t0 = t1;
        t1 = t2;
        A(i, col) = t2;
      }
    }
    A(i, degree + 1) = (i % 2 == 0) ? 1.0 : -1.0;
    b(i) = g.fx[ref.idx[static_cast<std::size_t>(i)]];
  }
  // Rank-revealing QR: the system is small, and an unlucky reference placement
  // can leave it poorly conditioned mid-exchange.
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
  LevelSolve out;
  out.cheb.resize(static_cast<std::size_t>(degree) + 1);
  for (int c = 0; c <= degree; ++c) out.cheb[static_cast<std::size_t>(c)] = sol(c);
  out.levelled = sol(degree + 1);
  return out;
}

// One candidate (argmax |r|) per maximal same-sign run of the residual.
std::vector<std::size_t> run_candidates(const std::vector<double>& r) {
  std::vector<std::size_t> cand;
  int cur_sign = 0;
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    int s = r[j] > 0.0 ? 1 : (r[j] < 0.0 ? -1 : 0);
    if (s == 0) s = cur_sign;  // fold exact zeros into the current run
    if (s != cur_sign && cur_sign != 0) {
      cand.push_back(best);
      best_abs = -1.0;
    }
    if (s != 0) cur_sign = s;
    const double a = std::fabs(r[j]);
    if (a > best_abs) {
      best_abs = a;
      best = j;
    }
  }
  if (cur_sign != 0) cand.push_back(best);
  return cand;
}

// Keep m consecutive candidates; the window must contain the global max and
// maximizes its smallest |r|.
std::vector<std::size_t> pick_window(const std::vector<std::size_t>& cand,
                                     const std::vector<double>& r, std::size_t m) {
  if (cand.size() <= m) return cand;
  std::size_t gpos = 0;
  for (std::size_t i = 1; i < cand.size(); ++i)
    if (std::fabs(r[cand[i]]) > std::fabs(r[cand[gpos]])) gpos = i;
  const std::size_t lo_start = gpos + 1 >= m ? gpos + 1 - m : 0;
  const std::size_t hi_start = std::min(gpos, cand.size() - m);
  std::size_t best_start = lo_start;
  double best_min = -1.0;
  for (std::size_t s = lo_start; s <= hi_start; ++s) {
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = s; i < s + m; ++i) mn = std::min(mn, std::fabs(r[cand[i]]));
    if (mn > best_min) {
      best_min = mn;
      best_start = s;
    }
  }
  return {cand.begin() + static_cast<std::ptrdiff_t>(best_start),
          cand.begin() + static_cast<std::ptrdiff_t>(best_start + m)};
}

std::vector<double> cheb_to_monomial(const std::vector<double>& cheb, double lo, double hi) {
  const std::size_t n = cheb.size();
  // Accumulate sum c_m T_m as monomial coefficients in s.
  std::vector<double> acc(n, 0.0), t0(n, 0.0), t1(n, 0.0), t2(n, 0.0);
  t0[0] = 1.0;
  if (n > 0) acc[0] += cheb[0] * t0[0];
  if (n > 1) {
    t1[1] = 1.0;
    acc[1] += cheb[1];
  }
  for (std::size_t m = 2; m < n; ++m) {
    for (std::size_t i = 0; i < n; ++i) t2[i] = -t0[i];
    for (std::size_t i = n - 1; i >= 1; --i) t2[i] += 2.0 * t1[i - 1];
    for (std::size_t i = 0; i < n; ++i) acc[i] += cheb[m] * t2[i];
    t0 = t1;
    t1 = t2;
  }
  // Substitute s = beta*x + gamma.
  const double beta = 2.0 / (hi - lo);
  const double gamma = -(lo + hi) / (hi - lo);
  std::vector<double> out(n, 0.0);
  for (std::size_t m = n; m-- > 0;) {
    // out = out * (beta*x + gamma) + acc[m]
    std::vector<double> nxt(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) nxt[i + 1] += out[i] * beta;
    for (std::size_t i = 0; i < n; ++i) nxt[i] += out[i] * gamma;
    nxt[0] += acc[m];
    out = std::move(nxt);
  }
  return out;
}

struct ExchangeResult {
  LevelSolve fit;
  Reference ref;
  double grid_max = 0.0;
  double gap = 1.0;
  bool converged = false;
};

ExchangeResult exchange_loop(const ExchangeGrid& g, Reference ref, int degree, double lo,
                             double hi, const RemezOptions& opt) {
  ExchangeResult best;
  double best_max = std::numeric_limits<double>::infinity();
  std::vector<double> resid(g.x.size());
  double fscale = 0.0;
  for (double v : g.fx) fscale = std::max(fscale, std::fabs(v));
  const double abs_floor = 1e-13 * std::max(1.0, fscale);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    const LevelSolve fit = solve_reference(g, ref, degree, lo, hi);
    par::map_fill(static_cast<std::int64_t>(g.x.size()), resid.data(), [&](std::int64_t j) {
      const double s = to_unit(g.x[static_cast<std::size_t>(j)], lo, hi);
      return g.fx[static_cast<std::size_t>(j)] - clenshaw(fit.cheb, s);
    });
    double grid_max = 0.0;
    for (double v : resid) grid_max = std::max(grid_max, std::fabs(v));

    ExchangeResult cur{fit, ref, grid_max, 1.0, false};
    if (grid_max <= abs_floor) {
      cur.gap = 0.0;
      cur.converged = true;
      return cur;
    }
    cur.gap = (grid_max - std::fabs(fit.levelled)) / grid_max;
    if (grid_max < best_max) {
      best_max = grid_max;
      best = cur;
    }
    if (cur.gap <= opt.rel_tol) {
      cur.converged = true;
      return cur;
    }

    const auto cand = run_candidates(resid);
    if (cand.size() < static_cast<std::size_t>(degree) + 2) {
      // Too few alternations to exchange; return what we have.
      return best;
    }
    Reference next;
    next.idx = pick_window(cand, resid, static_cast<std::size_t>(degree) + 2);
    if (next.idx == ref.idx) {
      cur.converged = cur.gap <= opt.rel_tol;
      return cur.converged ? cur : best;
    }
    ref = std::move(next);
  }
  return best;
}

// Insert a fine bracket of nodes around each reference point.
ExchangeGrid refine_grid(const std::function<double(double)>& f, const ExchangeGrid& g,
                         const Reference& ref) {
  std::vector<double> extra;
  for (std::size_t i = 0; i < ref.idx.size(); ++i) {
    const std::size_t j = ref.idx[i];
    const double left = j > 0 ? g.x[j - 1] : g.x[j];
    const double right = j + 1 < g.x.size() ? g.x[j + 1] : g.x[j];
    if (right <= left) continue;
    for (int t = 1; t < 32; ++t) extra.push_back(left + (right - left) * t / 32.0);
  }
  ExchangeGrid out;
  out.x = g.x;
  out.x.insert(out.x.end(), extra.begin(), extra.end());
  std::sort(out.x.begin(), out.x.end());
  out.x.erase(std::unique(out.x.begin(), out.x.end()), out.x.end());
  out.fx.resize(out.x.size());
  par::map_fill(static_cast<std::int64_t>(out.x.size()), out.fx.data(),
                [&](std::int64_t j) { return f(out.x[static_cast<std::size_t>(j)]); });
  return out;
}

Reference map_reference(const ExchangeGrid& from, const ExchangeGrid& to, const Reference& ref) {
  Reference out;
  out.idx.reserve(ref.idx.size());
  for (std::size_t j : ref.idx) {
    const auto it = std::lower_bound(to.x.begin(), to.x.end(), from.x[j]);
    std::size_t nj = static_cast<std::size_t>(it - to.x.begin());
    if (nj >= to.x.size()) nj = to.x.size() - 1;
    out.idx.push_back(nj);
  }
  for (std::size_t i = 1; i < out.idx.size(); ++i)
    if (out.idx[i] <= out.idx[i - 1]) out.idx[i] = out.idx[i - 1] + 1;
  return out;
}

Polynomial package(const ExchangeGrid& g, const ExchangeResult& res, int degree, double lo,
                   double hi) {
  Polynomial p;
  p.lo = lo;
  p.hi = hi;
  p.cheb = res.fit.cheb;
  p.coeffs = cheb_to_monomial(res.fit.cheb, lo, hi);
  p.coeffs.resize(static_cast<std::size_t>(degree) + 1, 0.0);
  double grid_max = 0.0;
  for (std::size_t j = 0; j < g.x.size(); ++j)
    grid_max = std::max(grid_max, std::fabs(g.fx[j] - clenshaw(p.cheb, to_unit(g.x[j], lo, hi))));
  p.sup_error = grid_max;
  p.certificate.reserve(res.ref.idx.size());
  for (std::size_t i = 0; i < res.ref.idx.size(); ++i) {
    const std::size_t j = res.ref.idx[i];
    const double dev = g.fx[j] - clenshaw(p.cheb, to_unit(g.x[j], lo, hi));
    p.certificate.push_back({g.x[j], dev, dev >= 0.0 ? 1 : -1});
  }
  return p;
}

}  // namespace

double Polynomial::eval(double x) const {
  if (!cheb.empty()) return clenshaw(cheb, to_unit(x, lo, hi));
  return eval_monomial(x);
}

double Polynomial::eval_monomial(double x) const {
  double v = 0.0;
  for (std::size_t m = coeffs.size(); m-- > 0;) v = v * x + coeffs[m];
  return v;
}

std::string Polynomial::to_json() const {
  nlohmann::json j;
  j["degree"] = degree();
  j["interval"] = {lo, hi};
  j["coeffs"] = coeffs;
  j["sup_error"] = sup_error;
  return j.dump(2);
}

Polynomial Polynomial::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Polynomial p;
  p.coeffs = j.at("coeffs").get<std::vector<double>>();
  const auto iv = j.at("interval").get<std::vector<double>>();
  if (iv.size() != 2) throw DataError("polynomial record: interval must have two endpoints");
  p.lo = iv[0];
  p.hi = iv[1];
  p.sup_error = j.at("sup_error").get<double>();
  const int deg = j.at("degree").get<int>();
  if (deg + 1 != static_cast<int>(p.coeffs.size()))
    throw DataError("polynomial record: degree does not match coefficient count");
  return p;
}

Polynomial remez_best_poly(const std::function<double(double)>& f, int degree, double lo,
                           double hi, const RemezOptions& opt) {
  if (degree < 0) throw ConfigError("remez_best_poly needs degree >= 0");
  if (!(hi > lo)) throw ConfigError("remez_best_poly needs hi > lo");
  const int grid_size = opt.grid_size > 0
                            ? std::max(opt.grid_size, degree + 2)
                            : std::max(2048, 64 * std::max(1, degree) * std::max(1, degree));
  ExchangeGrid g = build_grid(f, lo, hi, grid_size);
  Reference ref = initial_reference(g, degree, lo, hi);
  ExchangeResult res = exchange_loop(g, ref, degree, lo, hi, opt);

  // One refinement pass around the located extrema, then re-run the exchange
  // on the enriched grid.
  ExchangeGrid g2 = refine_grid(f, g, res.ref);
  Reference ref2 = map_reference(g, g2, res.ref);
  ExchangeResult res2 = exchange_loop(g2, ref2, degree, lo, hi, opt);

  if (!res2.converged) {
    Polynomial best = package(g2, res2, degree, lo, hi);
    throw RemezError("Remez exchange did not converge: relative gap " + std::to_string(res2.gap) +
                         " after " + std::to_string(opt.max_iter) + " iterations",
                     std::move(best), res2.gap);
  }
  return package(g2, res2, degree, lo, hi);
}

Polynomial remez_best_poly(const PhiSpec& spec, int degree, double lo, double hi,
                           const RemezOptions& opt) {
  return remez_best_poly([&spec](double x) { return spec.eval(0, x); }, degree, lo, hi, opt);
}

double JacksonTable::ratio() const {
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
  for (const auto& r : rows) {
    mn = std::min(mn, r.normalized);
    mx = std::max(mx, r.normalized);
  }
  return rows.empty() || mn <= 0.0 ? std::numeric_limits<double>::infinity() : mx / mn;
}

JacksonTable jackson_rate_probe(const PhiSpec& spec, std::span<const int> degrees, double delta,
                                const RemezOptions& opt) {
  if (!(delta > 0.0)) throw ConfigError("jackson_rate_probe needs delta > 0");
  JacksonTable t;
  t.delta = delta;
  t.alpha = spec.alpha;
  for (int L : degrees) {
    const Polynomial p = remez_best_poly(spec, L, 0.0, delta, opt);
    const double normalized =
        p.sup_error * std::pow(static_cast<double>(L) * L / delta, spec.alpha);
    t.rows.push_back({L, p.sup_error, normalized});
  }
  return t;
}

namespace {

double omega_impl(const std::function<double(double)>& f, double t, std::span<const double> grid,
                  bool second) {
  if (!(t >= 0.0)) throw ConfigError("moduli need t >= 0");
  const std::int64_t g = static_cast<std::int64_t>(grid.size());
  if (g < 2) throw ConfigError("moduli need at least two grid points");
  for (std::int64_t i = 1; i < g; ++i)
    if (grid[static_cast<std::size_t>(i)] < grid[static_cast<std::size_t>(i - 1)])
      throw ConfigError("moduli grid must be sorted ascending");
  std::vector<double> fv(static_cast<std::size_t>(g));
  for (std::int64_t i = 0; i < g; ++i) fv[static_cast<std::size_t>(i)] = f(grid[static_cast<std::size_t>(i)]);
  const double span = 2.0 * t;
  return par::map_max(g, [&](std::int64_t i) {
    double m = 0.0;
    const double xi = grid[static_cast<std::size_t>(i)];
    for (std::int64_t j = i + 1; j < g; ++j) {
      const double xj = grid[static_cast<std::size_t>(j)];
      if (xj - xi > span) break;
      const double v = second ? std::fabs(fv[static_cast<std::size_t>(i)] + fv[static_cast<std::size_t>(j)] -
                                          2.0 * f(0.5 * (xi + xj)))
                              : std::fabs(fv[static_cast<std::size_t>(i)] - fv[static_cast<std::size_t>(j)]);
      if (v > m) m = v;
    }
    return m;
  });
}

}  // namespace

double omega1(const std::function<double(double)>& f, double t, std::span<const double> grid) {
  return omega_impl(f, t, grid, false);
}

double omega2(const std::function<double(double)>& f, double t, std::span<const double> grid) {
  return omega_impl(f, t, grid, true);
}

namespace {

std::string cache_key(const PhiSpec& spec, int degree, double lo, double hi) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "|L%d|%a|%a", degree, lo, hi);
  return spec.id + buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string cache_filename(const std::string& key) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
  return std::string("poly_") + buf + ".json";
}

}  // namespace

PolyCache::PolyCache() {
  if (const char* env = std::getenv("ADDFUNC_CACHE_DIR"); env && *env)
    dir_ = std::filesystem::path(env);
}

PolyCache::PolyCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {}

Polynomial PolyCache::get(const PhiSpec& spec, int degree, double lo, double hi,
                          const RemezOptions& opt) {
  const std::string key = cache_key(spec, degree, lo, hi);
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [k, poly] : mem_)
      if (k == key) return poly;
  }
  if (dir_) {
    const auto file = *dir_ / cache_filename(key);
    std::ifstream in(file);
    if (in) {
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      Polynomial p = Polynomial::from_json(text);
      if (p.degree() == degree && p.lo == lo && p.hi == hi) {
        std::lock_guard<std::mutex> lock(mu_);
        mem_.emplace_back(key, p);
        return p;
      }
      // hash collision or stale record: fall through and recompute
    }
  }
  Polynomial p = remez_best_poly(spec, degree, lo, hi, opt);
  if (dir_) atomic_write(*dir_ / cache_filename(key), p.to_json());
  {
    std::lock_guard<std::mutex> lock(mu_);
    mem_.emplace_back(key, p);
  }
  return p;
}

}  // namespace addfunc
