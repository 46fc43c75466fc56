#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "uslearn/util.hpp"

namespace uslearn {

enum class LossKind {
  kHinge,               // max{2z/nu, 0}
  kTruncatedQuadratic,  // (max{1+z, 0})^2
  kExponential,         // e^z
  kEstimationError,     // u(z/w), u piecewise with plateau width set by h
};

struct SubgradientInterval {
  double lo, hi;
};

// A 1-D closed convex non-decreasing loss with a closed-form conjugate.
//
// The estimation-error loss is exposed in scale-free form u(z/w); any outer
// data-dependent scale is the caller's business.  u is C^1:
//   u(t) = 0                          t <= -2h-2
//        = (t/2 + 1 + h)^2            -2h-2 <= t <= -2h
//        = t + 2h + 1                 -2h <= t <= 2h
//        = t^2/4 + t(1-h) + (1+h)^2   t >= 2h
class Loss {
 public:
  static Loss hinge(double nu) {
    if (!(nu > 0.0) || nu > 1.0) {
      throw ValidationError("hinge loss requires nu in (0, 1], got " +
                            std::to_string(nu));
    }
    Loss l;
    l.kind_ = LossKind::kHinge;
    l.nu_ = nu;
    return l;
  }

  static Loss truncated_quadratic() {
    Loss l;
    l.kind_ = LossKind::kTruncatedQuadratic;
    return l;
  }

  static Loss exponential() {
    Loss l;
    l.kind_ = LossKind::kExponential;
    return l;
  }

  static Loss estimation_error(double h, double w) {
    if (!(w > 0.0) || h < 0.0) {
      throw ValidationError("estimation-error loss requires w > 0, h >= 0");
    }
    Loss l;
    l.kind_ = LossKind::kEstimationError;
    l.h_ = h;
    l.w_ = w;
    return l;
  }

  // Accepted forms: "hinge:nu=0.5", "tq", "exp", "esterr:h=1,w=1".
  static Loss parse(const std::string& text);

  LossKind kind() const { return kind_; }
  double nu() const { return nu_; }
  double h() const { return h_; }
  double w() const { return w_; }

  double eval(double z) const {
    switch (kind_) {
      case LossKind::kHinge:
        return std::max(2.0 * z / nu_, 0.0);
      case LossKind::kTruncatedQuadratic: {
        const double t = std::max(1.0 + z, 0.0);
        return t * t;
      }
      case LossKind::kExponential:
        return z > 700.0 ? kInf : std::exp(z);
      case LossKind::kEstimationError:
        return u(z / w_);
    }
    return 0.0;
  }

  // Closed-form conjugate sup_z {alpha z - loss(z)}; +inf outside the domain.
  double conjugate(double alpha) const {
    if (alpha < 0.0) return kInf;
    switch (kind_) {
      case LossKind::kHinge:
        return alpha <= 2.0 / nu_ ? 0.0 : kInf;
      case LossKind::kTruncatedQuadratic:
        return -alpha + alpha * alpha / 4.0;
      case LossKind::kExponential:
        return alpha == 0.0 ? 0.0 : alpha * std::log(alpha) - alpha;
      case LossKind::kEstimationError: {
        const double t = std::abs(alpha * w_ - 1.0) + h_;
        return t * t - (1.0 + h_) * (1.0 + h_);
      }
    }
    return kInf;
  }

  // Conjugate domain [inf, sup]: the smallest and largest alpha with a
  // finite conjugate value (inf is 0 for every non-decreasing loss here).
  double conjugate_domain_inf() const { return 0.0; }

  double conjugate_domain_sup() const {
    return kind_ == LossKind::kHinge ? 2.0 / nu_ : kInf;
  }

  // Closed subdifferential interval; a singleton wherever the loss is C^1
  // (all kinds except the hinge kink at z = 0).
  SubgradientInterval subgradient(double z) const {
    switch (kind_) {
      case LossKind::kHinge: {
        const double s = 2.0 / nu_;
        if (z < 0.0) return {0.0, 0.0};
        if (z > 0.0) return {s, s};
        return {0.0, s};
      }
      case LossKind::kTruncatedQuadratic: {
        const double g = z <= -1.0 ? 0.0 : 2.0 * (1.0 + z);
        return {g, g};
      }
      case LossKind::kExponential: {
        const double g = std::exp(z);
        return {g, g};
      }
      case LossKind::kEstimationError: {
        const double g = du(z / w_) / w_;
        return {g, g};
      }
    }
    return {0.0, 0.0};
  }

  double derivative(double z) const { return subgradient(z).hi; }

  // kappa with |loss(z) - loss(z')| <= kappa |z - z'| on [-radius, radius];
  // for a monotone convex loss this is the top subgradient at +radius.
  double lipschitz_bound(double radius) const {
    if (!(radius > 0.0)) throw ValidationError("lipschitz_bound: radius must be > 0");
    return subgradient(radius).hi;
  }

  std::string name() const {
    std::ostringstream os;
    switch (kind_) {
      case LossKind::kHinge:
        os << "hinge:nu=" << nu_;
        break;
      case LossKind::kTruncatedQuadratic:
        os << "tq";
        break;
      case LossKind::kExponential:
        os << "exp";
        break;
      case LossKind::kEstimationError:
        os << "esterr:h=" << h_ << ",w=" << w_;
        break;
    }
    return os.str();
  }

 private:
  double u(double t) const {
    if (t <= -2.0 * h_ - 2.0) return 0.0;
    if (t <= -2.0 * h_) {
      const double s = t / 2.0 + 1.0 + h_;
      return s * s;
    }
    if (t <= 2.0 * h_) return t + 2.0 * h_ + 1.0;
    return t * t / 4.0 + t * (1.0 - h_) + (1.0 + h_) * (1.0 + h_);
  }

  double du(double t) const {
    if (t <= -2.0 * h_ - 2.0) return 0.0;
    if (t <= -2.0 * h_) return t / 2.0 + 1.0 + h_;
    if (t <= 2.0 * h_) return 1.0;
    return t / 2.0 + 1.0 - h_;
  }

  LossKind kind_ = LossKind::kTruncatedQuadratic;
  double nu_ = 0.5;
  double h_ = 0.0;
  double w_ = 1.0;
};

namespace detail {

inline double parse_param(const std::string& params, const std::string& key) {
  const std::string token = key + "=";
  const auto pos = params.find(token);
  if (pos == std::string::npos) {
    throw ValidationError("loss spec missing parameter '" + key + "' in '" +
                          params + "'");
  }
  std::size_t parsed = 0;
  double value = 0.0;
  try {
    value = std::stod(params.substr(pos + token.size()), &parsed);
  } catch (const std::exception&) {
    throw ValidationError("bad numeric value for '" + key + "' in '" + params + "'");
  }
  return value;
}

}  // namespace detail

inline Loss Loss::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "hinge") return hinge(detail::parse_param(params, "nu"));
  if (head == "tq") return truncated_quadratic();
  if (head == "exp") return exponential();
  if (head == "esterr") {
    return estimation_error(detail::parse_param(params, "h"),
                            detail::parse_param(params, "w"));
  }
  throw ValidationError("unknown loss '" + text +
                        "' (expected hinge:nu=..., tq, exp, esterr:h=...,w=...)");
}

}  // namespace uslearn
