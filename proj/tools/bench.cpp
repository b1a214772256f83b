// Timing comparison of the serial reference kernels against the OpenMP
// versions on estimator-shaped workloads. The two paths are required to
// return bit-identical results, so the benchmark verifies that while timing.

#include <addfunc/estimators.hpp>
#include <addfunc/phi.hpp>
#include <addfunc/reduce.hpp>
#include <addfunc/risk.hpp>
#include <addfunc/sampling.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace {

double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now();
    f();
    best = std::min(best, now() - t0);
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-34s %10.4fs %10.4fs %7.2fx   %s\n", name, serial_s, parallel_s,
              serial_s / parallel_s, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::stoull(argv[1]) : 20000000;
  std::printf("threads: %d, elements: %zu\n", addfunc::max_threads(), n);
  std::printf("%-34s %11s %11s %8s\n", "kernel", "serial", "openmp", "speedup");

  using namespace addfunc;

  // Plugin-shaped reduction: phi(count / n) over a synthetic histogram.
  {
    const PhiSpec spec = power_phi(1.2);
    std::vector<double> freq(n);
    for (std::size_t i = 0; i < n; ++i)
      freq[i] = 0.5 * (1.0 + std::sin(0.001 * static_cast<double>(i))) / 1000.0;
    double a = 0.0, b = 0.0;
    const double ts = time_best_of(3, [&] {
      a = serial::map_sum(n, [&](std::size_t i) { return spec.eval(0, freq[i]); });
    });
    const double tp = time_best_of(3, [&] {
      b = par::map_sum(n, [&](std::size_t i) { return spec.eval(0, freq[i]); });
    });
    report("plugin reduction (p^1.2)", ts, tp, a == b);
  }

  // Residual scan: max |f - poly| over a dense grid, the Remez inner loop.
  {
    const PhiSpec spec = power_phi(1.2);
    const Polynomial poly = remez_best_poly(spec, 8, 0.0, 1.0);
    auto resid = [&](std::size_t i) {
      const double x = static_cast<double>(i) / static_cast<double>(n - 1);
      return std::fabs(spec.eval(0, x) - poly.eval(x));
    };
    double a = 0.0, b = 0.0;
    const double ts = time_best_of(3, [&] { a = serial::map_max(n, resid); });
    const double tp = time_best_of(3, [&] { b = par::map_max(n, resid); });
    report("residual scan (degree 8)", ts, tp, a == b);
  }

  // Monte Carlo cell: per-trial sampling + estimation, the risk-lab hot path.
  {
    const PhiSpec spec = power_phi(2.0);
    ProbabilityVector P;
    P.p.assign(1000, 1.0 / 1000.0);
    EstimatorConfig cfg;
    cfg.mode = Mode::plugin;
    cfg.n = 100000;
    const int trials = 200;
    CellStats sa, sb;
    const int before = addfunc::max_threads();
    const double ts = time_best_of(1, [&] {
      addfunc::set_threads(1);
      sa = monte_carlo_risk(spec, P, cfg, trials, 42);
    });
    const double tp = time_best_of(1, [&] {
      addfunc::set_threads(before);
      sb = monte_carlo_risk(spec, P, cfg, trials, 42);
    });
    report("monte carlo risk (200 trials)", ts, tp, sa.mean == sb.mean && sa.mse == sb.mse);
  }

  return 0;
}
