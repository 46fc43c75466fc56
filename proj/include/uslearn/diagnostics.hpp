#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "uslearn/loss.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

// Runnable diagnostics for the calibration machinery: the transform
//   psi(theta, rho) = l(rho) - inf_z { (1+theta)/2 l(rho-z)
//                                    + (1-theta)/2 l(rho+z) },
// its monotonicity in rho, and the quadratic lower bound available for the
// estimation-error loss.  The hinge variant is outside the regime these
// diagnostics assume (its derivative vanishes at -l(0)/2) and is rejected.

class OutsideRegimeError : public std::runtime_error {
 public:
  explicit OutsideRegimeError(const std::string& msg) : std::runtime_error(msg) {}
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

inline double psi(const Loss& loss, double theta, double rho) {
  if (loss.kind() == LossKind::kHinge) {
    throw OutsideRegimeError("psi: the hinge variant is excluded from the diagnostics");
  }
  if (theta < 0.0 || theta > 1.0) throw ValidationError("psi: theta must be in [0,1]");
  if (!is_finite(loss.eval(rho))) throw ValidationError("psi: loss value overflows at rho");
  if (theta == 0.0) return 0.0;

  const double wp = (1.0 + theta) / 2.0;
  const double wn = (1.0 - theta) / 2.0;
  auto inner = [&](double z) {
    const double a = loss.eval(rho - z), b = loss.eval(rho + z);
    return is_finite(a) && is_finite(b) ? wp * a + wn * b : kInf;
  };
  auto slope = [&](double z) {
    const double left = -wp * loss.subgradient(rho - z).lo;
    return wn == 0.0 ? left : left + wn * loss.subgradient(rho + z).hi;
  };

  // the minimizer sits at z >= 0 (slope at 0 is -theta l'(rho) <= 0);
  // expand to bracket the sign change of the subgradient
  double hi = 1.0;
  while (slope(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e6) {
      throw DivergenceError("psi: no bracket for the inner minimizer below 1e6");
    }
  }
  const double z_star = golden_min(inner, 0.0, hi, 1e-12, 160);
  const double value = loss.eval(rho) - inner(z_star);
  return std::max(value, 0.0);
}

struct PsiViolation {
  double theta = 0.0;
  double rho1 = 0.0, rho2 = 0.0;
  double psi1 = 0.0, psi2 = 0.0;
};

// Scans a table psi_values[i][j] = psi(theta_i, rho_j) (rhos ascending) for
// decreases in rho beyond tolerance.  Exposed separately so the scanner can
// be exercised on synthetic tables.
inline std::vector<PsiViolation> psi_monotone_violations(
    const std::vector<std::vector<double>>& psi_values, const std::vector<double>& thetas,
    const std::vector<double>& rhos, double tol = 1e-8) {
  std::vector<PsiViolation> out;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    for (std::size_t j = 0; j + 1 < rhos.size(); ++j) {
      if (psi_values[i][j] > psi_values[i][j + 1] + tol) {
        out.push_back({thetas[i], rhos[j], rhos[j + 1], psi_values[i][j], psi_values[i][j + 1]});
      }
    }
  }
  return out;
}

inline std::vector<PsiViolation> psi_monotone_check(const Loss& loss,
                                                    const std::vector<double>& thetas,
                                                    const std::vector<double>& rhos,
                                                    double tol = 1e-8) {
  std::vector<std::vector<double>> table(thetas.size(), std::vector<double>(rhos.size()));
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    for (std::size_t j = 0; j < rhos.size(); ++j) {
      table[i][j] = psi(loss, thetas[i], rhos[j]);
    }
  }
  return psi_monotone_violations(table, thetas, rhos, tol);
}

// ((4w-1)/(32 w^2)) theta^2, valid for the estimation-error loss with
// w > 1/2; psi(theta, rho) dominates it for every rho >= -l(0)/2.
inline double esterr_psi_lower_bound(double h, double w, double theta) {
  (void)h;  // any h >= 0 admits the same bound
  if (!(w > 0.5)) throw ValidationError("esterr_psi_lower_bound: requires w > 1/2");
  if (theta < 0.0 || theta >= 1.0) {
    throw ValidationError("esterr_psi_lower_bound: theta must be in [0,1)");
  }
  return (4.0 * w - 1.0) / (32.0 * w * w) * theta * theta;
}

// Symmetric curvature ratio (l(rho+z) + l(rho-z) - 2 l(rho)) / (z l'(rho)),
// zero at z = 0; requires l'(rho) > 0.
inline double xi(const Loss& loss, double z, double rho) {
  if (z < 0.0) throw ValidationError("xi: z must be >= 0");
  const double deriv = loss.subgradient(rho).lo;
  if (!(deriv > 0.0)) {
    throw OutsideRegimeError("xi: loss derivative vanishes at rho");
  }
  if (z == 0.0) return 0.0;
  return (loss.eval(rho + z) + loss.eval(rho - z) - 2.0 * loss.eval(rho)) / (z * deriv);
}

}  // namespace uslearn
