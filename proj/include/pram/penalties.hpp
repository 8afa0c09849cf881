// Coordinate-separable amenable penalties (Lasso, SCAD, MCP) and the smooth
// part q_lambda(beta) = lambda*||beta||_1 - rho_lambda(beta) that the
// composite gradient solver folds into the loss.
#pragma once

#include "pram/core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace pram {

enum class PenaltyFamily { Lasso, SCAD, MCP };

inline constexpr double kDefaultScadA = 3.7;
inline constexpr double kDefaultMcpB = 3.0;

struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::Lasso;
  double lambda = 0.0;
  /// SCAD a (> 2) or MCP b (> 0); unused for Lasso.
  double shape = kDefaultMcpB;

  static PenaltySpec lasso(double lambda) { return {PenaltyFamily::Lasso, lambda, 0.0}; }
  static PenaltySpec scad(double lambda, double a = kDefaultScadA) { return {PenaltyFamily::SCAD, lambda, a}; }
  static PenaltySpec mcp(double lambda, double b = kDefaultMcpB) { return {PenaltyFamily::MCP, lambda, b}; }
};

inline double default_shape(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::SCAD: return kDefaultScadA;
    case PenaltyFamily::MCP: return kDefaultMcpB;
    case PenaltyFamily::Lasso: return 0.0;
  }
  return 0.0;
}

inline std::string_view to_string(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::Lasso: return "lasso";
    case PenaltyFamily::SCAD: return "scad";
    case PenaltyFamily::MCP: return "mcp";
  }
  return "?";
}

inline PenaltyFamily parse_penalty_family(std::string_view s) {
  if (s == "lasso") return PenaltyFamily::Lasso;
  if (s == "scad") return PenaltyFamily::SCAD;
  if (s == "mcp") return PenaltyFamily::MCP;
  throw std::invalid_argument("unknown penalty family: " + std::string(s));
}

inline void validate(const PenaltySpec& spec) {
  detail::require(spec.lambda >= 0.0 && std::isfinite(spec.lambda), "penalty: lambda must be nonnegative");
  if (spec.family == PenaltyFamily::SCAD) detail::require(spec.shape > 2.0, "penalty: SCAD requires a > 2");
  if (spec.family == PenaltyFamily::MCP) detail::require(spec.shape > 0.0, "penalty: MCP requires b > 0");
}

namespace detail {

inline double sign(double t) { return (t > 0.0) - (t < 0.0); }

inline double raw_penalty(const PenaltySpec& s, double t) {
  const double lam = s.lambda;
  const double at = std::abs(t);
  switch (s.family) {
    case PenaltyFamily::Lasso:
      return lam * at;
    case PenaltyFamily::SCAD: {
      const double a = s.shape;
      if (at <= lam) return lam * at;
      if (at <= a * lam) return -(at * at - 2.0 * a * lam * at + lam * lam) / (2.0 * (a - 1.0));
      return (a + 1.0) * lam * lam / 2.0;
    }
    case PenaltyFamily::MCP: {
      const double b = s.shape;
      if (at <= b * lam) return lam * at - at * at / (2.0 * b);
      return b * lam * lam / 2.0;
    }
  }
  return 0.0;
}

/// q(t) = lambda*|t| - rho(t) and dq/dt; smooth everywhere including t = 0.
inline std::pair<double, double> raw_q(const PenaltySpec& s, double t) {
  const double lam = s.lambda;
  const double at = std::abs(t);
  switch (s.family) {
    case PenaltyFamily::Lasso:
      return {0.0, 0.0};
    case PenaltyFamily::SCAD: {
      const double a = s.shape;
      if (at <= lam) return {0.0, 0.0};
      if (at <= a * lam) {
        const double d = at - lam;
        return {d * d / (2.0 * (a - 1.0)), sign(t) * d / (a - 1.0)};
      }
      return {lam * at - (a + 1.0) * lam * lam / 2.0, sign(t) * lam};
    }
    case PenaltyFamily::MCP: {
      const double b = s.shape;
      if (at <= b * lam) return {at * at / (2.0 * b), t / b};
      return {lam * at - b * lam * lam / 2.0, sign(t) * lam};
    }
  }
  return {0.0, 0.0};
}

}  // namespace detail

inline double penalty_scalar(const PenaltySpec& spec, double t) {
  validate(spec);
  detail::require(std::isfinite(t), "penalty: non-finite argument");
  return detail::raw_penalty(spec, t);
}

/// d rho / dt. At t = 0 the right limit (+lambda) is returned.
inline double penalty_deriv(const PenaltySpec& spec, double t) {
  validate(spec);
  detail::require(std::isfinite(t), "penalty: non-finite argument");
  const double lam = spec.lambda;
  const double sg = t < 0.0 ? -1.0 : 1.0;
  const double at = std::abs(t);
  switch (spec.family) {
    case PenaltyFamily::Lasso:
      return sg * lam;
    case PenaltyFamily::SCAD: {
      const double a = spec.shape;
      if (at <= lam) return sg * lam;
      if (at <= a * lam) return sg * (a * lam - at) / (a - 1.0);
      return 0.0;
    }
    case PenaltyFamily::MCP: {
      const double b = spec.shape;
      return sg * lam * std::max(0.0, 1.0 - at / (lam * b));
    }
  }
  return 0.0;
}

inline double penalty_vector(const PenaltySpec& spec, const Eigen::Ref<const Vector>& beta) {
  validate(spec);
  detail::require(beta.allFinite(), "penalty: non-finite coefficient");
  double s = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) s += detail::raw_penalty(spec, beta(j));
  return s;
}

struct QValue {
  double value = 0.0;
  Vector gradient;
};

inline QValue q_value_and_grad(const PenaltySpec& spec, const Eigen::Ref<const Vector>& beta) {
  validate(spec);
  QValue out{0.0, Vector::Zero(beta.size())};
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const auto [q, dq] = detail::raw_q(spec, beta(j));
    out.value += q;
    out.gradient(j) = dq;
  }
  return out;
}

struct Amenability {
  double mu = 0.0;
  /// +infinity when the penalty never flattens (Lasso).
  double delta = std::numeric_limits<double>::infinity();
};

inline Amenability amenability(const PenaltySpec& spec) {
  validate(spec);
  switch (spec.family) {
    case PenaltyFamily::Lasso: return {0.0, std::numeric_limits<double>::infinity()};
    case PenaltyFamily::SCAD: return {1.0 / (spec.shape - 1.0), spec.shape};
    case PenaltyFamily::MCP: return {1.0 / spec.shape, spec.shape};
  }
  return {};
}

}  // namespace pram
