#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "uslearn/loss.hpp"
#include "uslearn/util.hpp"

namespace uslearn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One term (|alpha w - 1| d + r)^2 - (d + r)^2 of a revised conjugate.
struct AbsQuadTerm {
  double w = 1.0;  // class fraction m_o / m
  double d = 1.0;  // sqrt(mu' C mu)
  double r = 0.0;

  double eval(double alpha) const {
    const double t = std::abs(alpha * w - 1.0) * d + r;
    return t * t - (d + r) * (d + r);
  }
};

// Closed-form revised conjugate: a 1-D convex function on alpha >= 0 with
// value +inf below zero.  Three shapes cover every revision this library
// produces: the additive fixed point, a pure quadratic b1 a + b2 a^2, and a
// sum of absolute-value quadratics from level sets with a mean-error radius.
class RevisedConjugate {
 public:
  enum class Form { kAdditive, kQuadratic, kAbsQuadSum };

  static RevisedConjugate additive(const Loss& loss) {
    RevisedConjugate rc;
    rc.form_ = Form::kAdditive;
    rc.base_ = loss;
    return rc;
  }

  static RevisedConjugate quadratic(double b1, double b2) {
    RevisedConjugate rc;
    rc.form_ = Form::kQuadratic;
    rc.b1_ = b1;
    rc.b2_ = b2;
    return rc;
  }

  static RevisedConjugate abs_quad_sum(std::vector<AbsQuadTerm> terms) {
    RevisedConjugate rc;
    rc.form_ = Form::kAbsQuadSum;
    rc.terms_ = std::move(terms);
    return rc;
  }

  Form form() const { return form_; }
  double b1() const { return b1_; }
  double b2() const { return b2_; }
  const std::vector<AbsQuadTerm>& terms() const { return terms_; }

  double eval(double alpha) const {
    if (alpha < 0.0) return kInf;
    switch (form_) {
      case Form::kAdditive:
        return base_.conjugate(alpha);
      case Form::kQuadratic:
        return b1_ * alpha + b2_ * alpha * alpha;
      case Form::kAbsQuadSum: {
        double acc = 0.0;
        for (const auto& t : terms_) acc += t.eval(alpha);
        return acc;
      }
    }
    return kInf;
  }

  // The equivalent scale-free Loss when the form admits one.  A single
  // abs-quad term maps to the estimation-error loss with h = r/d and the
  // term's class fraction as w; the outer d^2 factor is dropped, which only
  // reparametrizes the regularization path.
  std::optional<Loss> as_loss() const {
    switch (form_) {
      case Form::kAdditive:
        return base_;
      case Form::kQuadratic:
        if (std::abs(b1_ + 1.0) < 1e-12 && std::abs(b2_ - 0.25) < 1e-12) {
          return Loss::truncated_quadratic();
        }
        return std::nullopt;
      case Form::kAbsQuadSum: {
        const AbsQuadTerm* active = nullptr;
        for (const auto& t : terms_) {
          if (t.d > 0.0) {
            if (active != nullptr) return std::nullopt;
            active = &t;
          }
        }
        if (active == nullptr) return std::nullopt;
        return Loss::estimation_error(active->r / active->d, active->w);
      }
    }
    return std::nullopt;
  }

 private:
  Form form_ = Form::kAdditive;
  Loss base_ = Loss::truncated_quadratic();
  double b1_ = 0.0, b2_ = 0.0;
  std::vector<AbsQuadTerm> terms_;
};

// Vertex representation: the set level is a function of the weight vector,
// either a quadratic form a' C a or the additive form (1/m) sum l*(m a_i).
struct VertexRep {
  enum class Kind { kQuadratic, kAdditive };

  static VertexRep quadratic(const MatrixXd& C) {
    if (C.rows() != C.cols()) throw ValidationError("VertexRep: C must be square");
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, C.cwiseAbs().maxCoeff())) {
      throw ValidationError("VertexRep: C must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(C);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff())) {
      throw ValidationError("VertexRep: C must be positive semidefinite");
    }
    VertexRep rep;
    rep.kind = Kind::kQuadratic;
    rep.C = C;
    return rep;
  }

  static VertexRep additive(const Loss& loss) {
    VertexRep rep;
    rep.kind = Kind::kAdditive;
    rep.loss = loss;
    return rep;
  }

  Kind kind = Kind::kAdditive;
  MatrixXd C;
  Loss loss = Loss::truncated_quadratic();
};

// Level-set representation: the set level is a function of the resulting
// point, h*(z) = (z-mu)' C (z-mu), or (sqrt of that + r)^2 with a mean
// estimation-error radius r.  Parameters must come from a calibration
// sample or prior config, never from the training indices the set is
// applied to; the constructors only accept explicit parameters.
struct LevelSetRep {
  VectorXd mu;
  MatrixXd inv_sigma;  // C (or Sigma^{-1}), symmetric PSD
  double r = 0.0;

  static LevelSetRep make(const VectorXd& mu, const MatrixXd& inv_sigma, double r = 0.0) {
    if (mu.size() != inv_sigma.rows() || inv_sigma.rows() != inv_sigma.cols()) {
      throw ValidationError("LevelSetRep: dimension mismatch");
    }
    if (r < 0.0) throw ValidationError("LevelSetRep: r must be >= 0");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(inv_sigma);
    if (es.eigenvalues().minCoeff() <
        -1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff())) {
      throw ValidationError("LevelSetRep: matrix must be positive semidefinite");
    }
    return LevelSetRep{mu, inv_sigma, r};
  }

  double eval(const VectorXd& z) const {
    if (z.size() != mu.size()) throw ValidationError("LevelSetRep: dimension mismatch");
    const double qf = (z - mu).dot(inv_sigma * (z - mu));
    if (r == 0.0) return qf;
    const double t = std::sqrt(std::max(qf, 0.0)) + r;
    return t * t;
  }

  double mean_scale() const { return std::sqrt(std::max(mu.dot(inv_sigma * mu), 0.0)); }
};

// A parametrized uncertainty set for one label: convex combinations of the
// class samples whose level value stays below c.  Only the additive form is
// accepted by the solver; vertex and level-set forms are revision inputs.
struct UncertaintySpec {
  std::variant<Loss, VertexRep, LevelSetRep> rep;
  int m_total = 0;              // m, over both labels
  std::vector<int> indices;     // M_o
  MatrixXd samples;             // rows: the class samples (level-set/ellipsoid)

  int m_o() const {
    if (!indices.empty()) return static_cast<int>(indices.size());
    return static_cast<int>(samples.rows());
  }
};

inline bool membership(const UncertaintySpec& spec, const VectorXd& alpha, double c) {
  const int n = static_cast<int>(alpha.size());
  if (spec.m_o() != 0 && n != spec.m_o()) {
    throw ValidationError("membership: weight vector length does not match M_o");
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (alpha[i] < -1e-12) return false;
    sum += alpha[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) return false;

  if (const Loss* loss = std::get_if<Loss>(&spec.rep)) {
    if (spec.m_total <= 0) throw ValidationError("membership: m_total not set");
    double level = 0.0;
    for (int i = 0; i < n; ++i) {
      level += loss->conjugate(static_cast<double>(spec.m_total) * alpha[i]);
      if (!is_finite(level)) return false;
    }
    return level / static_cast<double>(spec.m_total) <= c;
  }
  if (const VertexRep* v = std::get_if<VertexRep>(&spec.rep)) {
    if (v->kind == VertexRep::Kind::kQuadratic) {
      if (v->C.rows() != n) throw ValidationError("membership: C dimension mismatch");
      return alpha.dot(v->C * alpha) <= c;
    }
    if (spec.m_total <= 0) throw ValidationError("membership: m_total not set");
    double level = 0.0;
    for (int i = 0; i < n; ++i) {
      level += v->loss.conjugate(static_cast<double>(spec.m_total) * alpha[i]);
      if (!is_finite(level)) return false;
    }
    return level / static_cast<double>(spec.m_total) <= c;
  }
  const LevelSetRep& ls = std::get<LevelSetRep>(spec.rep);
  if (spec.samples.rows() != n) {
    throw ValidationError("membership: level-set form needs the class samples");
  }
  const VectorXd z = spec.samples.transpose() * alpha;
  return ls.eval(z) <= c;
}

// Additive projection of a vertex-form pair: the value of L_p* + L_n* on
// the diagonal (alpha/m) 1, recentered to vanish at zero.  Fixed point of
// the construction when both inputs are already additive in one conjugate.
inline RevisedConjugate revise_vertex(const VertexRep& rep_p, const VertexRep& rep_n,
                                      int m_total) {
  if (m_total <= 0) throw ValidationError("revise_vertex: m must be positive");
  if (rep_p.kind != rep_n.kind) {
    throw ValidationError("revise_vertex: reps must be both quadratic or both additive");
  }
  if (rep_p.kind == VertexRep::Kind::kQuadratic) {
    const double m = static_cast<double>(m_total);
    const double sum_p = VectorXd::Ones(rep_p.C.rows()).dot(rep_p.C * VectorXd::Ones(rep_p.C.rows()));
    const double sum_n = VectorXd::Ones(rep_n.C.rows()).dot(rep_n.C * VectorXd::Ones(rep_n.C.rows()));
    return RevisedConjugate::quadratic(0.0, (sum_p + sum_n) / (m * m));
  }
  if (rep_p.loss.name() != rep_n.loss.name()) {
    throw ValidationError("revise_vertex: additive reps must share one loss");
  }
  return RevisedConjugate::additive(rep_p.loss);
}

// Additive projection of a level-set pair evaluated along the direction of
// the class means.  For r = 0 this is the quadratic b1 a + b2 a^2 with the
// coefficients expanded symbolically; for r > 0 each class contributes an
// absolute-value quadratic term.
inline RevisedConjugate revise_levelset(const LevelSetRep& rep_p, const LevelSetRep& rep_n,
                                        int m_p, int m_n, int m_total) {
  if (m_p <= 0 || m_n <= 0 || m_p + m_n > m_total) {
    throw ValidationError("revise_levelset: bad class sizes");
  }
  const double m = static_cast<double>(m_total);
  const double d_p = rep_p.mean_scale();
  const double d_n = rep_n.mean_scale();
  if (d_p <= 0.0 && d_n <= 0.0) {
    throw ValidationError(
        "revise_levelset: both means vanish; shift the data so a class mean is nonzero");
  }
  const double w_p = static_cast<double>(m_p) / m;
  const double w_n = static_cast<double>(m_n) / m;
  if (rep_p.r == 0.0 && rep_n.r == 0.0) {
    const double b1 = -2.0 * (w_p * d_p * d_p + w_n * d_n * d_n);
    const double b2 = w_p * w_p * d_p * d_p + w_n * w_n * d_n * d_n;
    return RevisedConjugate::quadratic(b1, b2);
  }
  std::vector<AbsQuadTerm> terms;
  terms.push_back({w_p, d_p, rep_p.r});
  terms.push_back({w_n, d_n, rep_n.r});
  return RevisedConjugate::abs_quad_sum(std::move(terms));
}

// Ellipsoid-and-hull view of the truncated-quadratic uncertainty set.  The
// weight constraint sum alpha_i^2 <= 4(c+1)/m maps exactly onto the
// quadratic form (z - mean)' Cov^{-1} (z - mean) <= 4(c+1) m_o / m - 1 when
// the class samples are affinely independent; the -1 carries the unit
// weight-sum component that the raw image under the centered sample matrix
// does not see.  radius_sq < 0 means the set is empty.
struct EllipsoidView {
  VectorXd center;
  MatrixXd inv_shape;
  double radius_sq = 0.0;
  int m_o = 0;
};

inline EllipsoidView ellipsoid_view(const UncertaintySpec& spec, double c) {
  const Loss* loss = std::get_if<Loss>(&spec.rep);
  if (loss == nullptr || loss->kind() != LossKind::kTruncatedQuadratic) {
    throw ValidationError("ellipsoid_view: requires the additive truncated-quadratic form");
  }
  if (spec.m_total <= 0) throw ValidationError("ellipsoid_view: m_total not set");
  const int n = static_cast<int>(spec.samples.rows());
  if (n == 0) throw ValidationError("ellipsoid_view: class samples required");
  const VectorXd center = spec.samples.colwise().mean().transpose();
  MatrixXd cov = MatrixXd::Zero(spec.samples.cols(), spec.samples.cols());
  for (int i = 0; i < n; ++i) {
    const VectorXd d = spec.samples.row(i).transpose() - center;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);
  Eigen::FullPivLU<MatrixXd> lu(cov);
  if (!lu.isInvertible()) {
    throw ValidationError("ellipsoid_view: singular empirical covariance");
  }
  EllipsoidView view;
  view.center = center;
  view.inv_shape = lu.inverse();
  view.m_o = n;
  view.radius_sq =
      4.0 * (c + 1.0) * static_cast<double>(n) / static_cast<double>(spec.m_total) - 1.0;
  return view;
}

inline bool ellipsoid_contains(const EllipsoidView& view, const VectorXd& z) {
  if (view.radius_sq < 0.0) return false;
  return (z - view.center).dot(view.inv_shape * (z - view.center)) <= view.radius_sq;
}

}  // namespace uslearn
