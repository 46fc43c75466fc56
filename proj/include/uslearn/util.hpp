#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace uslearn {

// Extended-real convention: +infinity is a value (IEEE semantics: absorbs
// addition, dominates comparison), never a finite objective.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(double x) { return std::isfinite(x); }

// Invalid parameters, malformed inputs, infeasible configuration.  The CLI
// maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A solve ended in an unusable state (NaN objective, no feasible point).
// The CLI maps this to exit code 3.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric transform could not certify its result (e.g. a supremum attained
// at the edge of the search grid).
class BoundaryAttainmentError : public std::runtime_error {
 public:
  explicit BoundaryAttainmentError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Maximizes a unimodal (concave) function on [lo, hi] by golden-section.
// Returns the best evaluated point; accuracy ~ tol in the argument.
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol = 1e-10,
                  int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

template <typename F>
double golden_min(F&& f, double lo, double hi, double tol = 1e-10,
                  int max_iter = 200) {
  return golden_max([&](double x) { return -f(x); }, lo, hi, tol, max_iter);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.  Tasks write only
// to their own slots, so results do not depend on scheduling order.
template <typename F>
void parallel_for(int n, F&& fn, int threads) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace uslearn
