// Robust approximated quadratic losses l_alpha, their derivatives and the
// (weighted) empirical loss / gradient.
//
// Every family converges to u^2/2 as alpha grows. Quadratic is the limit
// itself and ignores alpha.
#pragma once

#include "pram/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

namespace pram {

enum class LossFamily { Huber, Tukey, Cauchy, Quadratic };

struct LossSpec {
  LossFamily family = LossFamily::Huber;
  double alpha = 1.0;
};

enum class WeightKind { Unweighted, InfinityCap };

/// Row weights (w, v). InfinityCap uses w(x) = min{1, cap / ||x||_inf}, v = 1.
struct WeightSpec {
  WeightKind kind = WeightKind::Unweighted;
  double cap = 4.0;
};

inline std::string_view to_string(LossFamily f) {
  switch (f) {
    case LossFamily::Huber: return "huber";
    case LossFamily::Tukey: return "tukey";
    case LossFamily::Cauchy: return "cauchy";
    case LossFamily::Quadratic: return "quadratic";
  }
  return "?";
}

inline LossFamily parse_loss_family(std::string_view s) {
  if (s == "huber") return LossFamily::Huber;
  if (s == "tukey") return LossFamily::Tukey;
  if (s == "cauchy") return LossFamily::Cauchy;
  if (s == "quadratic") return LossFamily::Quadratic;
  throw std::invalid_argument("unknown loss family: " + std::string(s));
}

inline std::string_view to_string(WeightKind k) {
  return k == WeightKind::Unweighted ? "none" : "infcap";
}

inline WeightKind parse_weight_kind(std::string_view s) {
  if (s == "none") return WeightKind::Unweighted;
  if (s == "infcap") return WeightKind::InfinityCap;
  throw std::invalid_argument("unknown weight kind: " + std::string(s));
}

namespace detail {

inline void check_loss_args(const LossSpec& spec, double u) {
  require(std::isfinite(u), "loss: non-finite argument");
  if (spec.family != LossFamily::Quadratic)
    require(spec.alpha > 0.0 && std::isfinite(spec.alpha), "loss: alpha must be positive and finite");
}

inline double raw_loss_value(const LossSpec& spec, double u) {
  const double a = spec.alpha;
  const double au = std::abs(u);
  switch (spec.family) {
    case LossFamily::Quadratic:
      return 0.5 * u * u;
    case LossFamily::Huber:
      return au <= a ? 0.5 * u * u : a * au - 0.5 * a * a;
    case LossFamily::Tukey: {
      if (au >= a) return a * a / 6.0;
      // a^2/6 * (1 - (1 - x)^3) expanded so that large alpha keeps full precision.
      const double x = (u / a) * (u / a);
      return 0.5 * u * u * (1.0 - x + x * x / 3.0);
    }
    case LossFamily::Cauchy:
      return 0.5 * a * a * std::log1p((u / a) * (u / a));
  }
  return 0.0;
}

inline double raw_loss_deriv(const LossSpec& spec, double u) {
  const double a = spec.alpha;
  switch (spec.family) {
    case LossFamily::Quadratic:
      return u;
    case LossFamily::Huber:
      return std::clamp(u, -a, a);
    case LossFamily::Tukey: {
      if (std::abs(u) > a) return 0.0;
      const double s = 1.0 - (u / a) * (u / a);
      return u * s * s;
    }
    case LossFamily::Cauchy:
      return u / (1.0 + (u / a) * (u / a));
  }
  return 0.0;
}

inline double raw_loss_second_deriv(const LossSpec& spec, double u) {
  const double a = spec.alpha;
  switch (spec.family) {
    case LossFamily::Quadratic:
      return 1.0;
    case LossFamily::Huber:
      return std::abs(u) <= a ? 1.0 : 0.0;
    case LossFamily::Tukey: {
      if (std::abs(u) > a) return 0.0;
      const double x = (u / a) * (u / a);
      return (1.0 - x) * (1.0 - 5.0 * x);
    }
    case LossFamily::Cauchy: {
      const double a2 = a * a;
      const double d = a2 + u * u;
      return a2 * (a2 - u * u) / (d * d);
    }
  }
  return 0.0;
}

}  // namespace detail

inline void validate(const LossSpec& spec) { detail::check_loss_args(spec, 0.0); }

inline double loss_value(const LossSpec& spec, double u) {
  detail::check_loss_args(spec, u);
  return detail::raw_loss_value(spec, u);
}

inline double loss_deriv(const LossSpec& spec, double u) {
  detail::check_loss_args(spec, u);
  return detail::raw_loss_deriv(spec, u);
}

/// Second derivative. At the Huber/Tukey kinks |u| == alpha the interior
/// (|u| < alpha) branch is returned.
inline double loss_second_deriv(const LossSpec& spec, double u) {
  detail::check_loss_args(spec, u);
  return detail::raw_loss_second_deriv(spec, u);
}

struct RowWeight {
  double w = 1.0;
  double v = 1.0;
};

inline RowWeight weight_eval(const WeightSpec& wspec, const Eigen::Ref<const Vector>& x_row) {
  detail::require(x_row.allFinite(), "weight: non-finite covariate");
  if (wspec.kind == WeightKind::Unweighted) return {};
  detail::require(wspec.cap > 0.0 && std::isfinite(wspec.cap), "weight: cap must be positive");
  const double norm = x_row.size() == 0 ? 0.0 : x_row.cwiseAbs().maxCoeff();
  if (norm == 0.0) return {};
  return {std::min(1.0, wspec.cap / norm), 1.0};
}

/// Loss bound to a dataset with per-row weights precomputed. Works on
/// residual vectors so callers that already hold X*beta avoid a matvec.
class WeightedLoss {
public:
  WeightedLoss(const Dataset& data, const LossSpec& lspec, const WeightSpec& wspec)
      : data_(&data), spec_(lspec), w_(data.n()), v_(data.n()) {
    validate(lspec);
    unit_v_ = true;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const RowWeight rw = weight_eval(wspec, data.design().row(i).transpose());
      w_(i) = rw.w;
      v_(i) = rw.v;
      unit_v_ = unit_v_ && rw.v == 1.0;
    }
  }

  const Dataset& data() const noexcept { return *data_; }
  const LossSpec& spec() const noexcept { return spec_; }
  const Vector& w() const noexcept { return w_; }
  const Vector& v() const noexcept { return v_; }

  /// residual = y - X beta
  Vector residuals(const Eigen::Ref<const Vector>& beta) const {
    detail::require(beta.size() == data_->p(), "loss: beta length does not match p");
    return data_->response() - data_->design() * beta;
  }

  double value_from_residuals(const Eigen::Ref<const Vector>& r) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (unit_v_)
        s += w_(i) * detail::raw_loss_value(spec_, r(i));
      else
        s += w_(i) / v_(i) * detail::raw_loss_value(spec_, r(i) * v_(i));
    }
    return s / static_cast<double>(r.size());
  }

  /// -(1/n) sum_i w_i l'(r_i v_i) x_i
  Vector gradient_from_residuals(const Eigen::Ref<const Vector>& r) const {
    Vector psi(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) psi(i) = w_(i) * detail::raw_loss_deriv(spec_, r(i) * v_(i));
    return -(data_->design().transpose() * psi) / static_cast<double>(r.size());
  }

  double value(const Eigen::Ref<const Vector>& beta) const { return value_from_residuals(residuals(beta)); }
  Vector gradient(const Eigen::Ref<const Vector>& beta) const {
    return gradient_from_residuals(residuals(beta));
  }

private:
  const Dataset* data_;
  LossSpec spec_;
  Vector w_;
  Vector v_;
  bool unit_v_ = true;
};

inline double empirical_loss(const Dataset& data, const Eigen::Ref<const Vector>& beta, const LossSpec& lspec,
                             const WeightSpec& wspec) {
  return WeightedLoss(data, lspec, wspec).value(beta);
}

inline Vector empirical_gradient(const Dataset& data, const Eigen::Ref<const Vector>& beta,
                                 const LossSpec& lspec, const WeightSpec& wspec) {
  return WeightedLoss(data, lspec, wspec).gradient(beta);
}

}  // namespace pram
