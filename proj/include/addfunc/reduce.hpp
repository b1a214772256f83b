#pragma once

// Deterministic reduction kernels.
//
// Sums are Kahan-compensated within fixed 1024-element blocks, then the block
// partials are combined by a pairwise tree in index order. The result depends
// only on the input values and their order -- never on the thread count -- so
// the OpenMP drivers in addfunc::par are bit-for-bit interchangeable with the
// reference loops in addfunc::serial. Library code calls the par:: entry
// points; the serial:: ones are kept as the reference the tests (and the
// bench tool) compare against.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace addfunc {

inline constexpr std::int64_t kReduceBlock = 1024;

namespace detail {

template <class F>
double kahan_range(std::int64_t lo, std::int64_t hi, F&& f) {
  double s = 0.0, comp = 0.0;
  for (std::int64_t i = lo; i < hi; ++i) {
    const double y = static_cast<double>(f(i)) - comp;
    const double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  return s;
}

// In-place pairwise tree over block partials; fixed combination order.
inline double pairwise_tree(std::vector<double>& partial) {
  if (partial.empty()) return 0.0;
  std::size_t len = partial.size();
  while (len > 1) {
    std::size_t out = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2) partial[out++] = partial[i] + partial[i + 1];
    if (len & 1) partial[out++] = partial[len - 1];
    len = out;
  }
  return partial[0];
}

inline std::int64_t block_count(std::int64_t n) { return (n + kReduceBlock - 1) / kReduceBlock; }

}  // namespace detail

namespace serial {

// sum_{i=0}^{n-1} f(i), blocked Kahan + pairwise tree.
template <class F>
double map_sum(std::int64_t n, F&& f) {
  if (n <= 0) return 0.0;
  const std::int64_t nb = detail::block_count(n);
  std::vector<double> partial(static_cast<std::size_t>(nb));
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::int64_t lo = b * kReduceBlock;
    const std::int64_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
    partial[static_cast<std::size_t>(b)] = detail::kahan_range(lo, hi, f);
  }
  return detail::pairwise_tree(partial);
}

template <class F>
double map_max(std::int64_t n, F&& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(f(i));
    if (v > m) m = v;
  }
  return m;
}

template <class F>
void map_fill(std::int64_t n, double* out, F&& f) {
  for (std::int64_t i = 0; i < n; ++i) out[i] = static_cast<double>(f(i));
}

inline double block_sum(std::span<const double> x) {
  return map_sum(static_cast<std::int64_t>(x.size()), [&](std::int64_t i) { return x[static_cast<std::size_t>(i)]; });
}

}  // namespace serial

namespace par {

template <class F>
double map_sum(std::int64_t n, F&& f) {
  if (n <= 0) return 0.0;
  const std::int64_t nb = detail::block_count(n);
  std::vector<double> partial(static_cast<std::size_t>(nb));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::int64_t lo = b * kReduceBlock;
    const std::int64_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
    partial[static_cast<std::size_t>(b)] = detail::kahan_range(lo, hi, f);
  }
  return detail::pairwise_tree(partial);
}

// max is exactly associative and commutative, so a plain OpenMP reduction is
// already schedule-independent.
template <class F>
double map_max(std::int64_t n, F&& f) {
  double m = -std::numeric_limits<double>::infinity();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : m)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(f(i));
    if (v > m) m = v;
  }
  return m;
}

template <class F>
void map_fill(std::int64_t n, double* out, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) out[i] = static_cast<double>(f(i));
}

inline double block_sum(std::span<const double> x) {
  return map_sum(static_cast<std::int64_t>(x.size()), [&](std::int64_t i) { return x[static_cast<std::size_t>(i)]; });
}

}  // namespace par

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

}  // namespace addfunc
