#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "uslearn/util.hpp"

namespace uslearn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class KernelKind { kLinear, kGaussian };

// Linear k(x,x') = x'x, or Gaussian k(x,x') = exp(-gamma ||x-x'||^2).
struct Kernel {
  KernelKind kind = KernelKind::kLinear;
  double gamma = 1.0;

  static Kernel linear() { return Kernel{KernelKind::kLinear, 0.0}; }

  static Kernel gaussian(double gamma) {
    if (!(gamma > 0.0)) throw ValidationError("gaussian kernel requires gamma > 0");
    return Kernel{KernelKind::kGaussian, gamma};
  }

  // "linear" or "gaussian:gamma=0.5"
  static Kernel parse(const std::string& text) {
    if (text == "linear") return linear();
    const std::string prefix = "gaussian:gamma=";
    if (text.rfind(prefix, 0) == 0) {
      try {
        return gaussian(std::stod(text.substr(prefix.size())));
      } catch (const ValidationError&) {
        throw;
      } catch (const std::exception&) {
        throw ValidationError("bad gamma in kernel spec '" + text + "'");
      }
    }
    throw ValidationError("unknown kernel '" + text +
                          "' (expected linear or gaussian:gamma=...)");
  }

  double operator()(const VectorXd& a, const VectorXd& b) const {
    if (a.size() != b.size()) throw ValidationError("kernel: dimension mismatch");
    if (kind == KernelKind::kLinear) return a.dot(b);
    return std::exp(-gamma * (a - b).squaredNorm());
  }

  std::string name() const {
    if (kind == KernelKind::kLinear) return "linear";
    return "gaussian:gamma=" + std::to_string(gamma);
  }
};

// G[i][j] = k(x_i, x'_j) for rows of X and Xp.
inline MatrixXd gram(const Kernel& kernel, const MatrixXd& X, const MatrixXd& Xp) {
  if (X.cols() != Xp.cols()) throw ValidationError("gram: dimension mismatch");
  if (kernel.kind == KernelKind::kLinear) return X * Xp.transpose();
  const VectorXd sx = X.rowwise().squaredNorm();
  const VectorXd sy = Xp.rowwise().squaredNorm();
  MatrixXd G = -2.0 * (X * Xp.transpose());
  G.colwise() += sx;
  G.rowwise() += sy.transpose();
  return (-kernel.gamma * G).array().exp().matrix();
}

inline MatrixXd gram(const Kernel& kernel, const MatrixXd& X) {
  MatrixXd G = gram(kernel, X, X);
  // enforce exact symmetry against rounding in the cross-term path
  G = 0.5 * (G + G.transpose()).eval();
  return G;
}

// sup_x sqrt(k(x,x)) over the given sample set (exact bound 1 for Gaussian).
inline double sup_sqrt_diag(const Kernel& kernel, const MatrixXd& X) {
  if (kernel.kind == KernelKind::kGaussian) return 1.0;
  return X.rows() == 0 ? 0.0 : std::sqrt(X.rowwise().squaredNorm().maxCoeff());
}

// f = sum_j beta_j k(., anchor_j)
struct KernelExpansion {
  Kernel kernel;
  MatrixXd anchors;      // rows are anchor points
  VectorXd coefficients;

  bool zero() const { return coefficients.size() == 0 || coefficients.isZero(0.0); }

  double eval(const VectorXd& x) const {
    if (coefficients.size() == 0) return 0.0;
    if (x.size() != anchors.cols()) {
      throw ValidationError("KernelExpansion::eval: dimension mismatch");
    }
    double acc = 0.0;
    for (Eigen::Index j = 0; j < anchors.rows(); ++j) {
      acc += coefficients[j] * kernel(x, anchors.row(j).transpose());
    }
    return acc;
  }

  VectorXd eval_batch(const MatrixXd& X) const {
    if (coefficients.size() == 0) return VectorXd::Zero(X.rows());
    return gram(kernel, X, anchors) * coefficients;
  }
};

// sqrt(beta' G beta); tiny negative quadratic forms are rounding and clamp
// to zero, anything below -1e-10 (relative) is a PSD violation.
inline double rkhs_norm(const KernelExpansion& f) {
  if (f.coefficients.size() == 0) return 0.0;
  const MatrixXd G = gram(f.kernel, f.anchors);
  const double q = f.coefficients.dot(G * f.coefficients);
  const double scale = std::max(1.0, G.diagonal().maxCoeff() * f.coefficients.squaredNorm());
  if (q < -1e-10 * scale) {
    throw SolverError("rkhs_norm: negative quadratic form (PSD violation): " +
                      std::to_string(q));
  }
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace uslearn
