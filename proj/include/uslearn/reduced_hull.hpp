#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "uslearn/kernel.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

// Geometric oracle for the minimum distance between two reduced convex
// hulls.  Runs the classical nearest-point scheme (Frank-Wolfe vertex
// generation with Wolfe's affine minor cycles) on the difference polytope
// { sum_p g_i phi(x_i) - sum_n g_j phi(x_j) }, entirely through the Gram
// matrix so that both linear and kernel geometries are covered.  Kept free
// of any code shared with the projected-gradient dual solver on purpose.

struct RchResult {
  double distance = 0.0;
  VectorXd gamma_p, gamma_n;  // hull weights, one per class sample
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// argmin_{g in capped simplex} <scores, g>: fill the cap along ascending
// scores until unit mass is spent.
inline VectorXd capped_simplex_lmo(const VectorXd& scores, double cap) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });
  VectorXd g = VectorXd::Zero(n);
  double mass = 1.0;
  for (int i : order) {
    const double take = std::min(cap, mass);
    g[i] = take;
    mass -= take;
    if (mass <= 0.0) break;
  }
  return g;
}

}  // namespace detail

// G is the Gram matrix over all m = |M_p| + |M_n| samples; idx_p / idx_n
// index the rows belonging to each class.  cap_o is the per-weight bound
// of class o's reduced hull (must satisfy cap_o * |M_o| >= 1).
inline RchResult rch_min_distance(const MatrixXd& G, const std::vector<int>& idx_p,
                                  const std::vector<int>& idx_n, double cap_p,
                                  double cap_n, double tol = 1e-12,
                                  int max_iter = 2000) {
  const int m = static_cast<int>(G.rows());
  if (idx_p.empty() || idx_n.empty()) {
    throw ValidationError("rch_min_distance: both classes must be non-empty");
  }
  if (cap_p * static_cast<double>(idx_p.size()) < 1.0 - 1e-12 ||
      cap_n * static_cast<double>(idx_n.size()) < 1.0 - 1e-12) {
    throw ValidationError("rch_min_distance: weight cap leaves the reduced hull empty");
  }

  // an atom is a signed weight vector delta (gamma_p on M_p, -gamma_n on M_n)
  auto make_atom = [&](const VectorXd& scores) {
    VectorXd sp(static_cast<int>(idx_p.size())), sn(static_cast<int>(idx_n.size()));
    for (std::size_t i = 0; i < idx_p.size(); ++i) sp[static_cast<int>(i)] = scores[idx_p[i]];
    // the negative block enters with a minus sign, so minimizing the inner
    // product means taking the largest scores there
    for (std::size_t j = 0; j < idx_n.size(); ++j) sn[static_cast<int>(j)] = -scores[idx_n[j]];
    const VectorXd gp = detail::capped_simplex_lmo(sp, cap_p);
    const VectorXd gn = detail::capped_simplex_lmo(sn, cap_n);
    VectorXd delta = VectorXd::Zero(m);
    for (std::size_t i = 0; i < idx_p.size(); ++i) delta[idx_p[i]] = gp[static_cast<int>(i)];
    for (std::size_t j = 0; j < idx_n.size(); ++j) delta[idx_n[j]] = -gn[static_cast<int>(j)];
    return delta;
  };

  std::vector<VectorXd> atoms;
  std::vector<double> weights;
  atoms.push_back(make_atom(VectorXd::Zero(m)));
  weights.push_back(1.0);

  VectorXd x = atoms[0];
  RchResult result;
  const double scale = std::max(1.0, G.diagonal().maxCoeff());

  for (int iter = 0; iter < max_iter; ++iter) {
    result.iterations = iter + 1;
    const VectorXd gx = G * x;
    const double xx = x.dot(gx);
    const VectorXd v = make_atom(gx);
    const double xv = v.dot(gx);
    if (xx - xv <= tol * scale) {
      result.converged = true;
      break;
    }
    atoms.push_back(v);
    weights.push_back(0.0);

    // minor cycles: affine min-norm over the current atoms, dropping atoms
    // whose affine weight goes negative
    for (int minor = 0; minor < 200; ++minor) {
      const int k = static_cast<int>(atoms.size());
      MatrixXd kkt = MatrixXd::Zero(k + 1, k + 1);
      for (int a = 0; a < k; ++a) {
        const VectorXd ga = G * atoms[static_cast<std::size_t>(a)];
        for (int b = 0; b < k; ++b) kkt(a, b) = atoms[static_cast<std::size_t>(b)].dot(ga);
        kkt(a, a) += 1e-13 * scale;
        kkt(a, k) = 1.0;
        kkt(k, a) = 1.0;
      }
      Eigen::VectorXd rhs = VectorXd::Zero(k + 1);
      rhs[k] = 1.0;
      const VectorXd sol = Eigen::FullPivLU<MatrixXd>(kkt).solve(rhs);
      bool all_nonneg = true;
      for (int a = 0; a < k; ++a) all_nonneg = all_nonneg && sol[a] >= -1e-12;
      if (all_nonneg) {
        for (int a = 0; a < k; ++a) weights[static_cast<std::size_t>(a)] = std::max(sol[a], 0.0);
        break;
      }
      // step toward the affine solution until the first weight hits zero
      double theta = 1.0;
      for (int a = 0; a < k; ++a) {
        if (sol[a] < 1e-12 && weights[static_cast<std::size_t>(a)] > sol[a]) {
          theta = std::min(theta, weights[static_cast<std::size_t>(a)] /
                                      (weights[static_cast<std::size_t>(a)] - sol[a]));
        }
      }
      for (int a = 0; a < k; ++a) {
        weights[static_cast<std::size_t>(a)] =
            (1.0 - theta) * weights[static_cast<std::size_t>(a)] + theta * sol[a];
      }
      for (int a = k - 1; a >= 0; --a) {
        if (weights[static_cast<std::size_t>(a)] <= 1e-12) {
          atoms.erase(atoms.begin() + a);
          weights.erase(weights.begin() + a);
        }
      }
    }
    x.setZero();
    for (std::size_t a = 0; a < atoms.size(); ++a) x += weights[a] * atoms[a];
  }

  result.distance = std::sqrt(std::max(x.dot(G * x), 0.0));
  result.gamma_p = VectorXd::Zero(static_cast<int>(idx_p.size()));
  result.gamma_n = VectorXd::Zero(static_cast<int>(idx_n.size()));
  for (std::size_t i = 0; i < idx_p.size(); ++i) result.gamma_p[static_cast<int>(i)] = x[idx_p[i]];
  for (std::size_t j = 0; j < idx_n.size(); ++j) result.gamma_n[static_cast<int>(j)] = -x[idx_n[j]];
  return result;
}

struct NuSvmModel {
  VectorXd w;       // normal vector in input space
  double lambda;    // ||w||, the equivalent norm-ball radius
  double distance;  // reduced-hull distance
  RchResult rch;
};

// Direct geometric solve of the nu-SVM training problem: its stationarity
// conditions reduce the normal to (nu/2) times the difference of the
// closest reduced-hull points with per-weight cap 2/(m nu).
inline NuSvmModel nu_svm_train(const MatrixXd& X, const VectorXi& y, double nu) {
  const int m = static_cast<int>(X.rows());
  if (!(nu > 0.0) || nu > 1.0) throw ValidationError("nu_svm_train: nu must be in (0,1]");
  std::vector<int> idx_p, idx_n;
  for (int i = 0; i < m; ++i) (y[i] == 1 ? idx_p : idx_n).push_back(i);
  const double cap = 2.0 / (static_cast<double>(m) * nu);
  const MatrixXd G = X * X.transpose();
  RchResult rch = rch_min_distance(G, idx_p, idx_n, cap, cap);

  NuSvmModel model;
  VectorXd z_p = VectorXd::Zero(X.cols()), z_n = VectorXd::Zero(X.cols());
  for (std::size_t i = 0; i < idx_p.size(); ++i) {
    z_p += rch.gamma_p[static_cast<int>(i)] * X.row(idx_p[i]).transpose();
  }
  for (std::size_t j = 0; j < idx_n.size(); ++j) {
    z_n += rch.gamma_n[static_cast<int>(j)] * X.row(idx_n[j]).transpose();
  }
  model.w = 0.5 * nu * (z_p - z_n);
  model.lambda = model.w.norm();
  model.distance = rch.distance;
  model.rch = std::move(rch);
  return model;
}

}  // namespace uslearn
