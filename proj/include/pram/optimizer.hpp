// Composite gradient descent for
//
//   min_{||beta||_1 <= R}  L_alpha,n(beta) + rho_lambda(beta)
//
// rewritten as (L - q) + lambda*||.||_1 so that each step is a soft-threshold
// restricted to the l1 ball. Also hosts the two-step warm-start procedure and
// a few diagnostics (stationarity, plug-in sandwich variance, RSC probe).
#pragma once

#include "pram/core.hpp"
#include "pram/losses.hpp"
#include "pram/penalties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

namespace pram {

struct SolverConfig {
  /// l1 side constraint ||beta||_1 <= radius.
  double radius = 1e4;
  int max_iter = 5000;
  /// Stop when |F_prev - F| <= tol * max(1, |F_prev|).
  double tol = 1e-7;
  double eta0 = 1.0;
  double shrink = 0.5;
};

inline void validate(const SolverConfig& c) {
  detail::require(c.radius > 0.0, "solver: radius must be positive");
  detail::require(c.max_iter > 0, "solver: max_iter must be positive");
  detail::require(c.tol > 0.0, "solver: tol must be positive");
  detail::require(c.eta0 > 0.0, "solver: eta0 must be positive");
  detail::require(c.shrink > 0.0 && c.shrink < 1.0, "solver: shrink must lie in (0, 1)");
}

struct FitResult {
  Vector beta;
  int iterations = 0;
  bool converged = false;
  /// Penalized objective L + rho at the start and after every accepted step.
  std::vector<double> objective_trace;
  double kkt_residual = 0.0;
  double alpha_used = 0.0;
  double lambda_used = 0.0;
  /// Filled by two_step_fit: the Huber+Lasso initializer.
  std::optional<Vector> step1_beta;
  int step1_iterations = 0;
};

inline Vector soft_threshold(const Eigen::Ref<const Vector>& v, double kappa) {
  detail::require(kappa >= 0.0, "soft_threshold: kappa must be nonnegative");
  Vector out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double m = std::abs(v(j)) - kappa;
    out(j) = m > 0.0 ? std::copysign(m, v(j)) : 0.0;
  }
  return out;
}

/// argmin_{||b||_1 <= R} 1/2 ||b - v||^2 + kappa ||b||_1.
///
/// If the plain soft-threshold is infeasible the threshold is raised to the
/// unique kappa* with ||S(v, kappa*)||_1 = R; kappa* is the root of a
/// piecewise-linear decreasing function, located exactly over the sorted |v|.
inline Vector constrained_prox(const Eigen::Ref<const Vector>& v, double kappa, double radius) {
  detail::require(radius > 0.0, "constrained_prox: radius must be positive");
  Vector out = soft_threshold(v, kappa);
  if (out.lpNorm<1>() <= radius) return out;

  std::vector<double> mags(static_cast<std::size_t>(v.size()));
  for (Eigen::Index j = 0; j < v.size(); ++j) mags[static_cast<std::size_t>(j)] = std::abs(v(j));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = kappa;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cumsum += mags[k];
    const double t = (cumsum - radius) / static_cast<double>(k + 1);
    if (mags[k] > t)
      theta = t;
    else
      break;
  }
  return soft_threshold(v, std::max(theta, kappa));
}

namespace detail {

inline void fill_xbeta(const Matrix& x, const Vector& beta, Vector& xb) {
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) nnz += beta(j) != 0.0;
  if (3 * nnz >= beta.size()) {
    xb.noalias() = x * beta;
    return;
  }
  xb.setZero(x.rows());
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta(j) != 0.0) xb.noalias() += beta(j) * x.col(j);
}

inline double kkt_from_gradient(const Vector& beta, const Vector& grad_bar, double lambda, double radius) {
  if (beta.lpNorm<1>() < radius * (1.0 - 1e-10)) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      const double g = grad_bar(j);
      const double r = beta(j) != 0.0 ? std::abs(g + std::copysign(lambda, beta(j)))
                                      : std::max(0.0, std::abs(g) - lambda);
      worst = std::max(worst, r);
    }
    return worst;
  }
  // Active side constraint: unit-step gradient mapping.
  const Vector moved = constrained_prox(beta - grad_bar, lambda, radius);
  return (beta - moved).lpNorm<Eigen::Infinity>();
}

}  // namespace detail

/// Stationarity measure at beta (0 at an exact stationary point).
///
/// With the side constraint inactive this is the l_inf norm of the
/// minimum-norm element of grad(L - q) + lambda * d||beta||_1. With it active
/// it is ||beta - P(beta - grad(L - q))||_inf where P is the constrained prox.
inline double kkt_residual(const Dataset& data, const Eigen::Ref<const Vector>& beta, const LossSpec& lspec,
                           const PenaltySpec& pspec, const WeightSpec& wspec, double radius) {
  validate(pspec);
  const WeightedLoss loss(data, lspec, wspec);
  const Vector b = beta;
  const Vector grad_bar = loss.gradient(b) - q_value_and_grad(pspec, b).gradient;
  return detail::kkt_from_gradient(b, grad_bar, pspec.lambda, radius);
}

/// Composite gradient descent on a loss with precomputed row weights.
inline FitResult composite_gd(const WeightedLoss& loss, const PenaltySpec& pspec, const SolverConfig& config,
                              const Eigen::Ref<const Vector>& init) {
  validate(pspec);
  validate(config);
  const Dataset& data = loss.data();
  detail::require(init.size() == data.p(), "composite_gd: init length does not match p");
  detail::require(init.allFinite(), "composite_gd: non-finite init");
  detail::require(init.lpNorm<1>() <= config.radius + 1e-8, "composite_gd: init violates the l1 side constraint");

  const Matrix& x = data.design();
  const Vector& y = data.response();
  const double lambda = pspec.lambda;

  FitResult res;
  res.alpha_used = loss.spec().alpha;
  res.lambda_used = lambda;

  Vector beta = init;
  Vector xb(data.n());
  detail::fill_xbeta(x, beta, xb);
  Vector r = y - xb;
  double l_val = loss.value_from_residuals(r);
  QValue q = q_value_and_grad(pspec, beta);
  double objective = l_val - q.value + lambda * beta.lpNorm<1>();
  if (!std::isfinite(objective)) throw DivergenceError("composite_gd: non-finite objective at init");
  res.objective_trace.push_back(objective);

  Vector beta_new(data.p());
  Vector xb_new(data.n());
  Vector r_new(data.n());
  Vector grad_bar(data.p());
  double eta = config.eta0;
  bool expand = false;
  constexpr int kMaxBacktracks = 200;

  for (int it = 0; it < config.max_iter; ++it) {
    grad_bar = loss.gradient_from_residuals(r) - q.gradient;
    const double lbar = l_val - q.value;
    if (expand) eta /= config.shrink;

    bool accepted = false;
    bool shrunk = false;
    bool stationary = false;
    double l_new = 0.0;
    QValue q_new;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      beta_new = constrained_prox(beta - eta * grad_bar, eta * lambda, config.radius);
      const Vector delta = beta_new - beta;
      const double step_sq = delta.squaredNorm();
      if (step_sq == 0.0) {
        stationary = true;
        break;
      }
      detail::fill_xbeta(x, beta_new, xb_new);
      r_new = y - xb_new;
      l_new = loss.value_from_residuals(r_new);
      if (!std::isfinite(l_new)) throw DivergenceError("composite_gd: non-finite loss during iteration");
      q_new = q_value_and_grad(pspec, beta_new);
      const double bound = lbar + grad_bar.dot(delta) + step_sq / (2.0 * eta);
      if (l_new - q_new.value <= bound + 1e-12 * std::max(1.0, std::abs(lbar))) {
        accepted = true;
        break;
      }
      eta *= config.shrink;
      shrunk = true;
    }
    if (stationary) {
      res.converged = true;
      break;
    }
    if (!accepted) break;

    const double objective_new = l_new - q_new.value + lambda * beta_new.lpNorm<1>();
    if (!std::isfinite(objective_new)) throw DivergenceError("composite_gd: non-finite objective");
    const double change = std::abs(objective - objective_new);
    const double scale = std::max(1.0, std::abs(objective));

    beta.swap(beta_new);
    r.swap(r_new);
    l_val = l_new;
    q = std::move(q_new);
    objective = objective_new;
    res.objective_trace.push_back(objective);
    res.iterations = it + 1;
    expand = !shrunk;

    if (change <= config.tol * scale) {
      res.converged = true;
      break;
    }
  }

  grad_bar = loss.gradient_from_residuals(r) - q.gradient;
  res.kkt_residual = detail::kkt_from_gradient(beta, grad_bar, lambda, config.radius);
  res.beta = std::move(beta);
  return res;
}

inline FitResult composite_gd(const Dataset& data, const LossSpec& lspec, const PenaltySpec& pspec,
                              const WeightSpec& wspec, const SolverConfig& config,
                              const Eigen::Ref<const Vector>& init) {
  return composite_gd(WeightedLoss(data, lspec, wspec), pspec, config, init);
}

/// Step 1 fits the convex Huber + Lasso problem (from step1_start, zero by
/// default); step 2 runs the target loss/penalty from the step-1 solution.
/// Both losses must share the same row weights, so `loss_target` and
/// `loss_init` are expected to be built on the same dataset and WeightSpec.
inline FitResult two_step_fit(const WeightedLoss& loss_target, const PenaltySpec& target_pspec,
                              const WeightedLoss& loss_init, double init_lambda, const SolverConfig& config,
                              const Vector* step1_start = nullptr, bool enforce_huber_init = true) {
  if (enforce_huber_init)
    detail::require(loss_init.spec().family == LossFamily::Huber, "two_step_fit: step-1 loss must be Huber");
  const Eigen::Index p = loss_target.data().p();
  const Vector zero = Vector::Zero(p);
  FitResult step1 =
      composite_gd(loss_init, PenaltySpec::lasso(init_lambda), config, step1_start ? *step1_start : zero);
  FitResult step2 = composite_gd(loss_target, target_pspec, config, step1.beta);
  step2.step1_iterations = step1.iterations;
  step2.step1_beta = std::move(step1.beta);
  return step2;
}

inline FitResult two_step_fit(const Dataset& data, const LossSpec& target_lspec, const PenaltySpec& target_pspec,
                              const WeightSpec& wspec, const LossSpec& init_lspec, double init_lambda,
                              const SolverConfig& config, bool enforce_huber_init = true) {
  const WeightedLoss target(data, target_lspec, wspec);
  const WeightedLoss init(data, init_lspec, wspec);
  return two_step_fit(target, target_pspec, init, init_lambda, config, nullptr, enforce_huber_init);
}

/// Plug-in sandwich variance nu_S' D^{-1} V D^{-1} nu_S over the support S of
/// beta_hat, with D = mean of l''(r_i) x_iS x_iS' and V the sample covariance
/// of l'(r_i) x_iS. Unweighted losses only.
inline double plugin_variance(const Dataset& data, const Eigen::Ref<const Vector>& beta_hat, const LossSpec& lspec,
                              const Eigen::Ref<const Vector>& nu) {
  validate(lspec);
  detail::require(beta_hat.size() == data.p() && nu.size() == data.p(),
                  "plugin_variance: beta_hat and nu must have length p");
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j)
    if (beta_hat(j) != 0.0) support.push_back(j);
  detail::require(!support.empty(), "plugin_variance: beta_hat has empty support");
  const auto s = static_cast<Eigen::Index>(support.size());
  const Eigen::Index n = data.n();
  detail::require(n >= 2, "plugin_variance: need n >= 2");

  Matrix xs(n, s);
  Vector nus(s);
  for (Eigen::Index k = 0; k < s; ++k) {
    xs.col(k) = data.design().col(support[static_cast<std::size_t>(k)]);
    nus(k) = nu(support[static_cast<std::size_t>(k)]);
  }
  if (nus.isZero(0.0)) return 0.0;

  const Vector r = data.response() - data.design() * beta_hat;
  Vector d2(n);
  Matrix z(n, s);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i) = loss_second_deriv(lspec, r(i));
    z.row(i) = loss_deriv(lspec, r(i)) * xs.row(i);
  }
  const Matrix hess = (xs.transpose() * d2.asDiagonal() * xs) / static_cast<double>(n);
  const Matrix centered = z.rowwise() - z.colwise().mean();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  const Eigen::JacobiSVD<Matrix> svd(hess);
  const Vector sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smax > 0.0) || !(cond < 1e12)) {
    std::ostringstream msg;
    msg << "plugin_variance: plug-in Hessian block is singular (condition number " << cond << ")";
    throw SingularMatrixError(msg.str(), cond);
  }
  const Vector a = hess.ldlt().solve(nus);
  return std::max(0.0, a.dot(cov * a));
}

struct RscProbe {
  double lhs = 0.0;
  /// ||beta1 - beta2||_2^2
  double l2_gap = 0.0;
  /// ||beta1 - beta2||_1^2
  double l1_gap = 0.0;
};

inline RscProbe rsc_probe(const Dataset& data, const LossSpec& lspec, const WeightSpec& wspec,
                          const Eigen::Ref<const Vector>& beta1, const Eigen::Ref<const Vector>& beta2) {
  const WeightedLoss loss(data, lspec, wspec);
  const Vector delta = beta1 - beta2;
  const double l1 = delta.lpNorm<1>();
  return {(loss.gradient(beta1) - loss.gradient(beta2)).dot(delta), delta.squaredNorm(), l1 * l1};
}

}  // namespace pram
