#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "uslearn/kernel.hpp"
#include "uslearn/loss.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

using Eigen::VectorXi;

// Minimum-distance problem over the parametrized uncertainty sets of one
// loss, posed on the weight simplices of the two labels:
//
//   min_a  (1/m) sum_i l*(m a_i) + lambda || sum_i a_i y_i k(., x_i) ||_H
//   s.t.   sum_{M_p} a = sum_{M_n} a = 1,  a >= 0.
//
// Solved by an accelerated proximal-gradient loop: the RKHS norm is the
// smooth part (smoothed by eps near zero), the separable conjugate terms
// plus the per-label simplex make up the prox, evaluated by bisection on
// the simplex multiplier.  For the hinge variant the conjugate is a box
// indicator, so the prox is exactly projection onto the capped simplex.
// Optimality is certified against the value of the primal problem at the
// normal recovered from the running iterate (no duality gap at optimum).

struct DualProblem {
  Loss loss;
  Kernel kernel;
  MatrixXd X;  // T1 samples, rows
  VectorXi y;
  double lambda = 1.0;

  int m() const { return static_cast<int>(X.rows()); }

  std::vector<int> idx_p() const { return label_idx(+1); }
  std::vector<int> idx_n() const { return label_idx(-1); }

  void validate() const {
    if (X.rows() != y.size()) throw ValidationError("DualProblem: X/y size mismatch");
    if (!(lambda > 0.0)) throw ValidationError("DualProblem: lambda must be positive");
    if (idx_p().empty() || idx_n().empty()) {
      throw ValidationError("DualProblem: both labels must be present");
    }
    if (loss.kind() == LossKind::kHinge) {
      const double cap = 2.0 / (static_cast<double>(m()) * loss.nu());
      for (const auto& idx : {idx_p(), idx_n()}) {
        if (cap * static_cast<double>(idx.size()) < 1.0 - 1e-12) {
          throw ValidationError(
              "DualProblem: hinge cap 2/(m nu) leaves a label's weight set empty");
        }
      }
    }
  }

 private:
  std::vector<int> label_idx(int label) const {
    std::vector<int> idx;
    for (int i = 0; i < y.size(); ++i) {
      if (y[i] == label) idx.push_back(i);
    }
    return idx;
  }
};

struct SolverDiag {
  int iterations = 0;
  bool cap_hit = false;
  double cert_gap = kInf;
  double pg_residual = kInf;
  std::vector<std::pair<int, double>> gap_trace;
};

struct DualSolution {
  VectorXd alpha;
  double c_p = 0.0, c_n = 0.0;
  double objective = 0.0;
  double z_gap = 0.0;  // RKHS distance between the two centers
  SolverDiag diag;
};

struct PrimalSolution {
  KernelExpansion f;
  double b = 0.0;
  double rho = 0.0;
  double objective = 0.0;
  SolverDiag diag;
};

namespace detail {

// 1-D prox of t * (1/m) l*(m a) over a >= 0, evaluated at u, together with
// its derivative in u (for the Newton step on the simplex multiplier).
struct Prox1d {
  double value;
  double deriv;
};

inline Prox1d prox_conjugate_1d(const Loss& loss, int m_total, double t, double u) {
  const double m = static_cast<double>(m_total);
  switch (loss.kind()) {
    case LossKind::kHinge: {
      const double cap = 2.0 / (m * loss.nu());
      if (u <= 0.0) return {0.0, 0.0};
      if (u >= cap) return {cap, 0.0};
      return {u, 1.0};
    }
    case LossKind::kTruncatedQuadratic: {
      const double denom = 1.0 + t * m / 2.0;
      const double a = (u + t) / denom;
      if (a <= 0.0) return {0.0, 0.0};
      return {a, 1.0 / denom};
    }
    case LossKind::kExponential: {
      // root of a + t log(m a) = u, solved for L = log a so that tiny
      // positive roots keep full relative accuracy
      auto phi = [&](double L) { return std::exp(L) + t * (L + std::log(m)) - u; };
      double L_lo = -700.0;
      if (phi(L_lo) >= 0.0) {
        const double a = std::exp(L_lo);
        return {a, a / (a + t)};
      }
      double L_hi = std::max(std::log(std::max(u, 1.0)), 1.0);
      for (int k = 0; k < 200 && phi(L_hi) < 0.0; ++k) L_hi += 4.0;
      double L = 0.5 * (L_lo + L_hi);
      for (int it = 0; it < 120; ++it) {
        const double val = phi(L);
        if (val > 0.0) {
          L_hi = L;
        } else {
          L_lo = L;
        }
        double next = L - val / (std::exp(L) + t);
        if (!(next > L_lo && next < L_hi)) next = 0.5 * (L_lo + L_hi);
        if (std::abs(next - L) <= 1e-15 * (1.0 + std::abs(L))) {
          L = next;
          break;
        }
        L = next;
      }
      const double a = std::exp(L);
      return {a, a / (a + t)};
    }
    case LossKind::kEstimationError: {
      const double w = loss.w(), h = loss.h();
      const double kink = 1.0 / (m * w);
      const double denom = 1.0 + 2.0 * t * m * w * w;
      const double a_low = (u + 2.0 * t * w * (1.0 + h)) / denom;   // branch a <= kink
      const double a_high = (u + 2.0 * t * w * (1.0 - h)) / denom;  // branch a >= kink
      if (a_low <= kink) {
        if (a_low <= 0.0) return {0.0, 0.0};
        return {a_low, 1.0 / denom};
      }
      if (a_high >= kink) return {a_high, 1.0 / denom};
      return {kink, 0.0};
    }
  }
  return {0.0, 0.0};
}

// Prox of the separable conjugate terms plus one label's unit simplex:
// find tau with sum_i prox1d(v_i - tau) = 1 (monotone in tau).
inline void prox_conjugate_simplex(const Loss& loss, int m_total, double t,
                                   const std::vector<int>& idx, const VectorXd& v,
                                   VectorXd& out) {
  const int n = static_cast<int>(idx.size());
  if (loss.kind() == LossKind::kHinge) {
    const double cap = 2.0 / (static_cast<double>(m_total) * loss.nu());
    if (cap * static_cast<double>(n) <= 1.0 + 1e-12) {
      for (int i : idx) out[i] = cap;  // unique feasible point
      return;
    }
  }
  auto sum_at = [&](double tau, double* deriv) {
    double s = 0.0, ds = 0.0;
    for (int i : idx) {
      const Prox1d p = prox_conjugate_1d(loss, m_total, t, v[i] - tau);
      s += p.value;
      ds -= p.deriv;
    }
    if (deriv != nullptr) *deriv = ds;
    return s;
  };

  double tau_hi = v.maxCoeff() + 1.0, tau_lo = v.minCoeff() - 1.0;
  double grow = 1.0;
  for (int k = 0; k < 200 && sum_at(tau_hi, nullptr) > 1.0; ++k) {
    tau_hi += grow;
    grow *= 2.0;
  }
  grow = 1.0;
  for (int k = 0; k < 200 && sum_at(tau_lo, nullptr) < 1.0; ++k) {
    tau_lo -= grow;
    grow *= 2.0;
  }
  if (sum_at(tau_lo, nullptr) < 1.0) {
    throw SolverError("prox: cannot bracket the simplex multiplier");
  }

  double tau = 0.5 * (tau_lo + tau_hi);
  for (int it = 0; it < 120; ++it) {
    double deriv = 0.0;
    const double s = sum_at(tau, &deriv);
    if (std::abs(s - 1.0) <= 1e-14) break;
    if (s > 1.0) {
      tau_lo = tau;
    } else {
      tau_hi = tau;
    }
    double next = deriv < -1e-300 ? tau - (s - 1.0) / deriv : tau;
    if (!(next > tau_lo && next < tau_hi)) next = 0.5 * (tau_lo + tau_hi);
    if (std::abs(next - tau) <= 1e-17 * (1.0 + std::abs(tau))) {
      tau = next;
      break;
    }
    tau = next;
  }

  double total = 0.0;
  for (int i : idx) {
    out[i] = prox_conjugate_1d(loss, m_total, t, v[i] - tau).value;
    total += out[i];
  }
  if (total > 0.0 && std::abs(total - 1.0) > 1e-15) {
    for (int i : idx) out[i] /= total;
  }
  if (loss.kind() == LossKind::kHinge) {
    const double cap = 2.0 / (static_cast<double>(m_total) * loss.nu());
    for (int i : idx) out[i] = std::min(out[i], cap);
  }
}

// (1/m) sum_i l*(m a_i); +inf off the conjugate domain.
inline double separable_conjugate_value(const Loss& loss, const VectorXd& alpha) {
  const double m = static_cast<double>(alpha.size());
  double acc = 0.0;
  for (int i = 0; i < alpha.size(); ++i) {
    const double v = loss.conjugate(std::max(m * alpha[i], 0.0));
    if (!is_finite(v)) return kInf;
    acc += v;
  }
  return acc / m;
}

struct RhoB {
  double rho = 0.0;
  double b = 0.0;
  double value = 0.0;
};

// Exact minimization of -2 rho + (1/m) sum l(rho - y_i F_i - y_i b) over
// (rho, b): nested golden sections, both coordinates convex.
inline RhoB exact_rho_b(const Loss& loss, const VectorXd& F, const VectorXi& y) {
  const int m = static_cast<int>(F.size());
  const double inv_m = 1.0 / static_cast<double>(m);

  auto inner = [&](double b, double* rho_out) {
    double c_lo = kInf, c_hi = -kInf;
    for (int i = 0; i < m; ++i) {
      const double c = static_cast<double>(y[i]) * (F[i] + b);
      c_lo = std::min(c_lo, c);
      c_hi = std::max(c_hi, c);
    }
    auto phi = [&](double rho) {
      double acc = -2.0 * rho;
      for (int i = 0; i < m; ++i) {
        const double v = loss.eval(rho - static_cast<double>(y[i]) * (F[i] + b));
        if (!is_finite(v)) return kInf;
        acc += inv_m * v;
      }
      return acc;
    };
    double lo = c_lo - 4.0 - loss.eval(0.0);
    double hi = c_hi + 4.0 + loss.eval(0.0);
    // expand right until the slope turns non-negative (a flat tail for the
    // hinge with nu = 1 just widens the plateau; the value is unaffected)
    for (int k = 0; k < 60; ++k) {
      double slope = -2.0;
      for (int i = 0; i < m; ++i) {
        slope += inv_m * loss.subgradient(hi - static_cast<double>(y[i]) * (F[i] + b)).hi;
      }
      if (slope >= 0.0) break;
      hi += (hi - lo);
    }
    const double rho = golden_min(phi, lo, hi, 1e-13, 140);
    if (rho_out != nullptr) *rho_out = rho;
    return phi(rho);
  };

  double B = 4.0 + 2.0 * F.cwiseAbs().maxCoeff() + loss.eval(0.0);
  RhoB best;
  for (int round = 0; round < 4; ++round) {
    const double b = golden_min([&](double bb) { return inner(bb, nullptr); }, -B, B, 1e-13, 140);
    best.b = b;
    best.value = inner(b, &best.rho);
    if (std::abs(b) < 0.95 * B) break;
    B *= 4.0;
  }
  return best;
}

}  // namespace detail

// Normal recovery from a dual solution: the scaled difference of the two
// optimal centers, of RKHS norm exactly lambda, or the zero expansion when
// the centers coincide (z_gap below 1e-7 lambda).
inline KernelExpansion recover_normal(const DualProblem& problem, const DualSolution& sol) {
  KernelExpansion f;
  f.kernel = problem.kernel;
  const double z_tol = 1e-7 * problem.lambda;
  if (sol.z_gap <= z_tol) {
    f.anchors.resize(0, problem.X.cols());
    f.coefficients.resize(0);
    return f;
  }
  VectorXd delta(sol.alpha.size());
  for (int i = 0; i < sol.alpha.size(); ++i) {
    delta[i] = static_cast<double>(problem.y[i]) * sol.alpha[i];
  }
  f.anchors = problem.X;
  f.coefficients = (problem.lambda / sol.z_gap) * delta;
  return f;
}

inline DualSolution solve_dual(const DualProblem& problem, double tol = 1e-7) {
  problem.validate();
  const int m = problem.m();
  const double lambda = problem.lambda;
  const Loss& loss = problem.loss;
  const auto idx_p = problem.idx_p();
  const auto idx_n = problem.idx_n();
  const MatrixXd G = gram(problem.kernel, problem.X);
  const double eps = 1e-10;  // norm smoothing near delta = 0

  VectorXd yv(m);
  for (int i = 0; i < m; ++i) yv[i] = static_cast<double>(problem.y[i]);

  struct Smooth {
    double value;
    double q;  // delta' G delta
    VectorXd grad;
  };
  auto smooth_at = [&](const VectorXd& a) {
    VectorXd delta = yv.cwiseProduct(a);
    VectorXd Gd = G * delta;
    Smooth s;
    s.q = delta.dot(Gd);
    const double sn = std::sqrt(std::max(s.q, 0.0) + eps * eps);
    s.value = lambda * sn;
    s.grad = (lambda / sn) * yv.cwiseProduct(Gd);
    return s;
  };

  auto prox = [&](const VectorXd& v, double t) {
    VectorXd out = VectorXd::Zero(m);
    detail::prox_conjugate_simplex(loss, m, t, idx_p, v, out);
    detail::prox_conjugate_simplex(loss, m, t, idx_n, v, out);
    return out;
  };

  auto true_objective = [&](const VectorXd& a, double* q_out) {
    VectorXd delta = yv.cwiseProduct(a);
    const double q = delta.dot(G * delta);
    if (q_out != nullptr) *q_out = q;
    return detail::separable_conjugate_value(loss, a) + lambda * std::sqrt(std::max(q, 0.0));
  };

  // feasible start: prox of the uniform point
  VectorXd alpha = VectorXd::Zero(m);
  {
    VectorXd uniform = VectorXd::Zero(m);
    for (int i : idx_p) uniform[i] = 1.0 / static_cast<double>(idx_p.size());
    for (int i : idx_n) uniform[i] = 1.0 / static_cast<double>(idx_n.size());
    alpha = prox(uniform, 1.0);
  }
  VectorXd alpha_prev = alpha;
  VectorXd yk = alpha;
  double theta = 1.0;
  double t = 1.0;

  const int cap = 100 * m;
  const int cert_every = 25;

  DualSolution sol;
  sol.diag.iterations = 0;

  auto certify = [&](const VectorXd& a) {
    double q = 0.0;
    const double dual_val = true_objective(a, &q);
    const double zg = std::sqrt(std::max(q, 0.0));
    // primal candidates from the recovered normal and from zero
    double best_primal = detail::exact_rho_b(loss, VectorXd::Zero(m), problem.y).value;
    if (zg > 1e-7 * lambda) {
      VectorXd delta = yv.cwiseProduct(a);
      const VectorXd F = (lambda / zg) * (G * delta);
      best_primal = std::min(best_primal, detail::exact_rho_b(loss, F, problem.y).value);
    }
    return std::make_pair(best_primal + dual_val, dual_val);
  };

  for (int iter = 1; iter <= cap; ++iter) {
    sol.diag.iterations = iter;
    const Smooth sy = smooth_at(yk);
    VectorXd next;
    for (int bt = 0; bt < 60; ++bt) {
      next = prox(yk - t * sy.grad, t);
      const Smooth sn = smooth_at(next);
      const double rhs = sy.value + sy.grad.dot(next - yk) +
                         (next - yk).squaredNorm() / (2.0 * t) + 1e-15 * (1.0 + sy.value);
      if (sn.value <= rhs) break;
      t *= 0.5;
    }
    // adaptive restart on momentum reversal
    if ((yk - next).dot(next - alpha) > 0.0) {
      theta = 1.0;
      yk = next;
    } else {
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      yk = next + ((theta - 1.0) / theta_next) * (next - alpha);
      theta = theta_next;
    }
    alpha_prev = alpha;
    alpha = next;
    t *= 1.2;

    if (iter % cert_every == 0 || iter == cap ||
        (alpha - alpha_prev).norm() <= 0.1 * tol * (1.0 + alpha.norm())) {
      const auto [gap, dual_val] = certify(alpha);
      sol.diag.cert_gap = gap;
      sol.diag.gap_trace.emplace_back(iter, gap);
      const Smooth sa = smooth_at(alpha);
      const VectorXd stationary = prox(alpha - t * sa.grad, t);
      sol.diag.pg_residual = (alpha - stationary).norm();
      if (gap <= tol * (1.0 + std::abs(dual_val)) &&
          sol.diag.pg_residual <= tol * (1.0 + alpha.norm())) {
        break;
      }
    }
    if (iter == cap) sol.diag.cap_hit = true;
  }

  double q = 0.0;
  sol.objective = true_objective(alpha, &q);
  if (!is_finite(sol.objective)) throw SolverError("solve_dual: non-finite objective");
  sol.alpha = alpha;
  sol.z_gap = std::sqrt(std::max(q, 0.0));
  const double md = static_cast<double>(m);
  sol.c_p = 0.0;
  sol.c_n = 0.0;
  for (int i : idx_p) sol.c_p += loss.conjugate(std::max(md * alpha[i], 0.0)) / md;
  for (int i : idx_n) sol.c_n += loss.conjugate(std::max(md * alpha[i], 0.0)) / md;
  return sol;
}

// Independent primal solver for
//   min -2 rho + (1/m) sum l(rho - y_i (f(x_i) + b))  s.t.  ||f||_H <= lambda
// over the representer coefficients: alternates exact (rho, b) minimization
// with projected-gradient sweeps on beta, the projection onto the Gram-norm
// ball done in the eigenbasis.  The nonsmooth hinge runs on its upper
// subgradient and converges to modest accuracy only; the smooth losses are
// the ones this oracle certifies.
inline PrimalSolution solve_primal(const DualProblem& problem, double tol = 1e-7) {
  problem.validate();
  const int m = problem.m();
  const double lambda = problem.lambda;
  const Loss& loss = problem.loss;
  const double inv_m = 1.0 / static_cast<double>(m);
  const MatrixXd G = gram(problem.kernel, problem.X);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
  const VectorXd evals = es.eigenvalues().cwiseMax(0.0);
  const MatrixXd& Q = es.eigenvectors();

  auto project_ball = [&](const VectorXd& beta) {
    VectorXd v = Q.transpose() * beta;
    const double q = (evals.array() * v.array().square()).sum();
    if (q <= lambda * lambda) return beta;
    double lo = 0.0, hi = 1.0;
    auto norm_at = [&](double s) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        const double vi = v[i] / (1.0 + s * evals[i]);
        acc += evals[i] * vi * vi;
      }
      return acc;
    };
    for (int k = 0; k < 200 && norm_at(hi) > lambda * lambda; ++k) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (norm_at(mid) > lambda * lambda ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    VectorXd w = v;
    for (int i = 0; i < m; ++i) w[i] /= 1.0 + s * evals[i];
    return VectorXd(Q * w);
  };

  VectorXd beta = VectorXd::Zero(m);
  detail::RhoB rb = detail::exact_rho_b(loss, VectorXd::Zero(m), problem.y);

  auto objective_at = [&](const VectorXd& bb, double rho, double b) {
    const VectorXd F = G * bb;
    double acc = -2.0 * rho;
    for (int i = 0; i < m; ++i) {
      const double v = loss.eval(rho - static_cast<double>(problem.y[i]) * (F[i] + b));
      if (!is_finite(v)) return kInf;
      acc += inv_m * v;
    }
    return acc;
  };
  auto loss_part = [&](const VectorXd& F, double rho, double b) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const double v = loss.eval(rho - static_cast<double>(problem.y[i]) * (F[i] + b));
      if (!is_finite(v)) return kInf;
      acc += inv_m * v;
    }
    return acc;
  };

  PrimalSolution sol;
  const bool nonsmooth = loss.kind() == LossKind::kHinge;
  double t = 1.0;
  double prev_obj = objective_at(beta, rb.rho, rb.b);
  VectorXd best_beta = beta;
  detail::RhoB best_rb = rb;
  double best_obj = prev_obj;
  int stall = 0;
  const int cap = 100 * m;
  int total_steps = 0;

  while (total_steps < cap) {
    // gradient sweep on beta at fixed (rho, b); the hinge runs on plain
    // projected subgradient steps (its kink defeats the descent model)
    for (int inner = 0; inner < 25 && total_steps < cap; ++inner, ++total_steps) {
      const VectorXd F = G * beta;
      VectorXd q(m);
      for (int i = 0; i < m; ++i) {
        double arg = rb.rho - static_cast<double>(problem.y[i]) * (F[i] + rb.b);
        // the exact (rho, b) step parks arguments on the hinge kink to
        // rounding accuracy; pick the subgradient from just above it
        if (nonsmooth) arg += 1e-9 * (1.0 + std::abs(arg));
        q[i] = -inv_m * static_cast<double>(problem.y[i]) * loss.derivative(arg);
      }
      const VectorXd grad = G * q;
      VectorXd next;
      if (nonsmooth) {
        const double gn = grad.norm();
        if (gn <= 1e-15) break;
        const double step = lambda / (gn * std::sqrt(static_cast<double>(total_steps + 1)));
        next = project_ball(beta - step * grad);
      } else {
        const double base = loss_part(F, rb.rho, rb.b);
        for (int bt = 0; bt < 60; ++bt) {
          next = project_ball(beta - t * grad);
          const double val = loss_part(G * next, rb.rho, rb.b);
          if (val <= base + grad.dot(next - beta) +
                         (next - beta).squaredNorm() / (2.0 * t) + 1e-15 * (1.0 + base)) {
            break;
          }
          t *= 0.5;
        }
        t *= 1.15;
      }
      const double move = (next - beta).norm();
      beta = next;
      if (nonsmooth) {
        const detail::RhoB cand = detail::exact_rho_b(loss, G * beta, problem.y);
        if (cand.value < best_obj) {
          best_obj = cand.value;
          best_beta = beta;
          best_rb = cand;
        }
      }
      if (move <= 1e-14 * (1.0 + beta.norm())) break;
    }
    rb = detail::exact_rho_b(loss, G * beta, problem.y);
    if (rb.value < best_obj) {
      best_obj = rb.value;
      best_beta = beta;
      best_rb = rb;
    }
    const double obj = rb.value;
    if (std::abs(prev_obj - obj) <= 0.02 * tol * (1.0 + std::abs(obj))) {
      if (++stall >= (nonsmooth ? 12 : 3)) break;
    } else {
      stall = 0;
    }
    prev_obj = obj;
  }
  sol.diag.iterations = total_steps;
  sol.diag.cap_hit = total_steps >= cap;

  sol.f.kernel = problem.kernel;
  sol.f.anchors = problem.X;
  sol.f.coefficients = best_beta;
  sol.b = best_rb.b;
  sol.rho = best_rb.rho;
  sol.objective = best_obj;
  if (!is_finite(sol.objective)) throw SolverError("solve_primal: non-finite objective");
  return sol;
}

inline bool loss_has_bounded_conjugate_domain(const Loss& loss) {
  return is_finite(loss.conjugate_domain_sup());
}

// |primal + dual| after checking both solutions are feasible for the same
// problem; the dual block equals minus the primal infimum at optimum.
inline double duality_gap(const DualProblem& problem, const PrimalSolution& primal,
                          const DualSolution& dual) {
  problem.validate();
  const int m = problem.m();
  // primal feasibility: representer norm within the ball
  const MatrixXd G = gram(problem.kernel, problem.X);
  if (primal.f.coefficients.size() > 0) {
    const double q = primal.f.coefficients.dot(G * primal.f.coefficients);
    if (q > problem.lambda * problem.lambda + 1e-8 * (1.0 + problem.lambda * problem.lambda)) {
      throw ValidationError("duality_gap: primal violates ||f||_H <= lambda: " +
                            std::to_string(std::sqrt(std::max(q, 0.0))));
    }
  }
  // dual feasibility: per-label simplex (capped for the hinge)
  if (dual.alpha.size() != m) throw ValidationError("duality_gap: alpha length mismatch");
  for (const auto& [idx, name] :
       {std::make_pair(problem.idx_p(), "positive"), std::make_pair(problem.idx_n(), "negative")}) {
    double sum = 0.0;
    for (int i : idx) {
      if (dual.alpha[i] < -1e-12) {
        throw ValidationError(std::string("duality_gap: negative weight in ") + name + " label");
      }
      sum += dual.alpha[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError(std::string("duality_gap: ") + name +
                            " label weights sum to " + std::to_string(sum));
    }
  }
  if (loss_has_bounded_conjugate_domain(problem.loss)) {
    const double cap = problem.loss.conjugate_domain_sup() / static_cast<double>(m);
    for (int i = 0; i < m; ++i) {
      if (dual.alpha[i] > cap + 1e-9) {
        throw ValidationError("duality_gap: weight exceeds the conjugate-domain cap");
      }
    }
  }
  return std::abs(primal.objective + dual.objective);
}

}  // namespace uslearn
