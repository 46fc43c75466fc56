#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "uslearn/loss.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

// Brute-force Legendre-Fenchel transform used to validate every closed-form
// conjugate and revision formula.  Deliberately shares no computation with
// the closed forms in loss.hpp: grid scan plus golden-section refinement.

struct GridSpec {
  double lo;
  double hi;
  int n;

  GridSpec(double lo_, double hi_, int n_) : lo(lo_), hi(hi_), n(n_) {
    if (!(lo < hi) || n < 3) {
      throw ValidationError("GridSpec requires lo < hi and n >= 3");
    }
  }

  double point(int i) const {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
};

// sup_z {alpha z - f(z)}.  The argmax must fall in the grid interior;
// attainment at an endpoint means the true supremum may be +inf or the grid
// is too small, and raises BoundaryAttainmentError.
template <typename F>
double numeric_conjugate(F&& f, const GridSpec& grid, double alpha) {
  int best = 0;
  double best_val = -kInf;
  for (int i = 0; i < grid.n; ++i) {
    const double z = grid.point(i);
    const double v = alpha * z - f(z);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0 || best == grid.n - 1) {
    throw BoundaryAttainmentError(
        "numeric_conjugate: supremum attained at grid boundary (alpha=" +
        std::to_string(alpha) + ")");
  }
  const double z_star = golden_max(
      [&](double z) { return alpha * z - f(z); }, grid.point(best - 1),
      grid.point(best + 1), 1e-12, 120);
  return std::max(best_val, alpha * z_star - f(z_star));
}

// Evaluates f** on a fixed grid.  The alpha search range is the slope range
// of f over the grid, which brackets the conjugate domain, so attainment at
// an alpha endpoint is legitimate and not an error.  Inner conjugate values
// that hit the z-grid boundary are treated as outside the domain.
template <typename F>
class BiconjugateOracle {
 public:
  BiconjugateOracle(F f, const GridSpec& grid, int alpha_points = 801)
      : f_(std::move(f)), grid_(grid) {
    if (alpha_points < 3) throw ValidationError("alpha_points must be >= 3");
    double s_lo = kInf, s_hi = -kInf;
    double prev = f_(grid.point(0));
    for (int i = 1; i < grid.n; ++i) {
      const double cur = f_(grid.point(i));
      const double slope = (cur - prev) / (grid.point(i) - grid.point(i - 1));
      s_lo = std::min(s_lo, slope);
      s_hi = std::max(s_hi, slope);
      prev = cur;
    }
    if (!(s_lo <= s_hi) || !is_finite(s_lo) || !is_finite(s_hi)) {
      throw ValidationError("BiconjugateOracle: f not finite on grid");
    }
    alpha_lo_ = s_lo;
    alpha_hi_ = s_hi;
    table_.resize(alpha_points);
    for (int j = 0; j < alpha_points; ++j) {
      table_[j] = conj(alpha_at(j));
    }
  }

  double eval(double z) const {
    const int na = static_cast<int>(table_.size());
    int best = 0;
    double best_val = -kInf;
    for (int j = 0; j < na; ++j) {
      if (!is_finite(table_[j])) continue;
      const double v = alpha_at(j) * z - table_[j];
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    if (!is_finite(best_val)) {
      throw BoundaryAttainmentError("biconjugate: empty conjugate domain");
    }
    const double a = alpha_at(std::max(0, best - 1));
    const double b = alpha_at(std::min(na - 1, best + 1));
    const double a_star = golden_max(
        [&](double alpha) {
          const double c = conj(alpha);
          return is_finite(c) ? alpha * z - c : -kInf;
        },
        a, b, 1e-12, 90);
    const double refined = conj(a_star);
    if (is_finite(refined)) best_val = std::max(best_val, a_star * z - refined);
    return best_val;
  }

 private:
  double alpha_at(int j) const {
    return alpha_lo_ + (alpha_hi_ - alpha_lo_) * static_cast<double>(j) /
                           static_cast<double>(table_.size() - 1);
  }

  double conj(double alpha) const {
    try {
      return numeric_conjugate(f_, grid_, alpha);
    } catch (const BoundaryAttainmentError&) {
      return kInf;
    }
  }

  F f_;
  GridSpec grid_;
  double alpha_lo_ = 0.0, alpha_hi_ = 0.0;
  std::vector<double> table_;
};

template <typename F>
double numeric_biconjugate(F&& f, const GridSpec& grid, double z,
                           int alpha_points = 801) {
  BiconjugateOracle<std::decay_t<F>> oracle(std::forward<F>(f), grid, alpha_points);
  return oracle.eval(z);
}

// Default grids wide enough for the shipped losses on desk-scale arguments;
// the exponential grid stops early on the right to avoid overflow.
inline GridSpec default_grid(const Loss& loss) {
  if (loss.kind() == LossKind::kExponential) return GridSpec(-50.0, 8.0, 8001);
  return GridSpec(-50.0, 50.0, 8001);
}

}  // namespace uslearn
