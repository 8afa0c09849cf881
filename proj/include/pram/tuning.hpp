// Two-dimensional (alpha, log lambda) grid search with K-fold
// cross-validation scored by the trimmed mean squared prediction error.
#pragma once

#include "pram/core.hpp"
#include "pram/estimator.hpp"
#include "pram/optimizer.hpp"
#include "pram/parallel.hpp"
#include "pram/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace pram {

struct TuningGrid {
  std::vector<double> alphas;
  std::vector<double> lambdas;

  std::size_t cells() const noexcept { return alphas.size() * lambdas.size(); }
};

inline void validate(const TuningGrid& g) {
  auto check = [](const std::vector<double>& v, const char* what) {
    detail::require(!v.empty(), std::string("grid: empty ") + what);
    for (std::size_t i = 0; i < v.size(); ++i) {
      detail::require(v[i] > 0.0 && std::isfinite(v[i]), std::string("grid: non-positive ") + what);
      if (i > 0) detail::require(v[i] > v[i - 1], std::string("grid: ") + what + " not strictly increasing");
    }
  };
  check(g.alphas, "alphas");
  check(g.lambdas, "lambdas");
}

/// alpha uniform on [0.1, 10] * sqrt(n / log p); lambda log-uniform on
/// [0.01, 2.5] * sqrt(log p / n). Endpoints included.
inline TuningGrid default_grid(int n, int p, int n_alpha, int n_lambda) {
  detail::require(n >= 2, "default_grid: need n >= 2");
  detail::require(p >= 2, "default_grid: p = 1 gives a degenerate range (log p = 0)");
  detail::require(n_alpha >= 2 && n_lambda >= 2, "default_grid: need at least 2 points per axis");
  const double logp = std::log(static_cast<double>(p));
  const double ascale = std::sqrt(static_cast<double>(n) / logp);
  const double lscale = std::sqrt(logp / static_cast<double>(n));
  TuningGrid g;
  const double a_lo = 0.1 * ascale, a_hi = 10.0 * ascale;
  for (int i = 0; i < n_alpha; ++i) g.alphas.push_back(a_lo + (a_hi - a_lo) * i / (n_alpha - 1));
  g.alphas.back() = a_hi;
  const double l_lo = std::log(0.01 * lscale), l_hi = std::log(2.5 * lscale);
  for (int i = 0; i < n_lambda; ++i) g.lambdas.push_back(std::exp(l_lo + (l_hi - l_lo) * i / (n_lambda - 1)));
  g.lambdas.front() = 0.01 * lscale;
  g.lambdas.back() = 2.5 * lscale;
  return g;
}

/// Mean of the squared errors after dropping the largest floor(trim * m).
inline double trimmed_mspe(std::span<const double> squared_errors, double trim_fraction) {
  detail::require(!squared_errors.empty(), "trimmed_mspe: empty input");
  detail::require(trim_fraction >= 0.0 && trim_fraction < 0.5, "trimmed_mspe: trim must lie in [0, 0.5)");
  std::vector<double> v(squared_errors.begin(), squared_errors.end());
  std::sort(v.begin(), v.end());
  const auto drop = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(v.size())));
  const std::size_t keep = v.size() - drop;
  double s = 0.0;
  for (std::size_t i = 0; i < keep; ++i) s += v[i];
  return s / static_cast<double>(keep);
}

enum class Step1Mode {
  /// Step-1 Huber+Lasso uses the cell's own (alpha, lambda).
  SameCell,
  /// Step-1 uses a fixed (step1_alpha, step1_lambda) for every cell.
  Fixed,
};

struct CVOptions {
  int folds = 10;
  double trim = 0.1;
  SolverConfig solver{};
  std::uint64_t seed = 1;
  Step1Mode step1_mode = Step1Mode::SameCell;
  double step1_alpha = 0.0;
  double step1_lambda = 0.0;
  /// Warm-start step 1 along each alpha's lambda path (largest lambda first).
  bool warm_start = true;
  unsigned threads = 1;
};

struct CVResult {
  /// scores(i, j) for alphas[i], lambdas[j]; +inf where a fit diverged.
  Matrix scores;
  double best_alpha = 0.0;
  double best_lambda = 0.0;
  Eigen::Index best_alpha_index = 0;
  Eigen::Index best_lambda_index = 0;
  std::vector<int> fold_assignment;
  int failed_fits = 0;
};

/// Seeded partition into K folds whose sizes differ by at most one.
inline std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
  detail::require(folds >= 2, "cv: need K >= 2");
  detail::require(n >= static_cast<std::size_t>(folds), "cv: need n >= K");
  Engine rng = make_stream(seed, {0x666f6c64u});
  const auto perm = random_permutation(rng, n);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return out;
}

/// Minimum score; ties go to the larger lambda, then the larger alpha.
inline std::pair<Eigen::Index, Eigen::Index> select_best(const Matrix& scores) {
  Eigen::Index bi = 0, bj = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      const double s = scores(i, j), b = scores(bi, bj);
      const bool better = s < b || (s == b && (j > bj || (j == bj && i > bi)));
      if (better) {
        bi = i;
        bj = j;
      }
    }
  return {bi, bj};
}

/// Cross-validates several estimators on shared folds. Estimators with the
/// same row weights share their step-1 Huber+Lasso fits. Each result equals
/// what a single-estimator call would produce.
inline std::vector<CVResult> cross_validate_many(const Dataset& data, const TuningGrid& grid,
                                                 std::span<const EstimatorSpec> estimators,
                                                 const CVOptions& opt) {
  validate(grid);
  validate(opt.solver);
  detail::require(!estimators.empty(), "cv: no estimators");
  detail::require(opt.trim >= 0.0 && opt.trim < 0.5, "cv: trim must lie in [0, 0.5)");
  if (opt.step1_mode == Step1Mode::Fixed)
    detail::require(opt.step1_alpha > 0.0 && opt.step1_lambda >= 0.0, "cv: fixed step-1 needs alpha > 0");

  const auto n = static_cast<std::size_t>(data.n());
  const auto folds = assign_folds(n, opt.folds, opt.seed);
  const std::size_t na = grid.alphas.size(), nl = grid.lambdas.size(), ne = estimators.size();
  const auto nf = static_cast<std::size_t>(opt.folds);

  // Estimators grouped by weight spec, in first-appearance order.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t e = 0; e < ne; ++e) {
    bool placed = false;
    for (auto& g : groups)
      if (same_weights(estimators[g.front()].weight, estimators[e].weight)) {
        g.push_back(e);
        placed = true;
        break;
      }
    if (!placed) groups.push_back({e});
  }

  // fold_scores[((e * na + a) * nl + l) * nf + f]
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> fold_scores(ne * na * nl * nf, inf);
  std::vector<int> fold_failures(nf * na * ne, 0);

  auto task = [&](std::size_t t) {
    const std::size_t f = t / na, a = t % na;
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i)
      (folds[i] == static_cast<int>(f) ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Dataset tr = data.subset_rows(train);
    const Dataset te = data.subset_rows(test);
    const double alpha = grid.alphas[a];
    const Vector zero = Vector::Zero(data.p());
    std::vector<double> sq(test.size());

    for (const auto& group : groups) {
      const WeightSpec& wspec = estimators[group.front()].weight;
      const double s1_alpha = opt.step1_mode == Step1Mode::Fixed ? opt.step1_alpha : alpha;
      const WeightedLoss init_loss(tr, {LossFamily::Huber, s1_alpha}, wspec);
      std::vector<WeightedLoss> targets;
      targets.reserve(group.size());
      for (std::size_t e : group) targets.emplace_back(tr, estimators[e].loss_spec(alpha), wspec);

      std::optional<FitResult> fixed_step1;
      if (opt.step1_mode == Step1Mode::Fixed) {
        try {
          fixed_step1 = composite_gd(init_loss, PenaltySpec::lasso(opt.step1_lambda), opt.solver, zero);
        } catch (const DivergenceError&) {
          for (std::size_t e : group) fold_failures[t * ne + e] += static_cast<int>(nl);
          continue;
        }
      }

      Vector warm = zero;
      for (std::size_t li = nl; li-- > 0;) {
        const double lambda = grid.lambdas[li];
        Vector start;
        try {
          if (fixed_step1) {
            start = fixed_step1->beta;
          } else {
            FitResult s1 = composite_gd(init_loss, PenaltySpec::lasso(lambda), opt.solver,
                                        opt.warm_start ? warm : zero);
            start = s1.beta;
            warm = s1.beta;
          }
        } catch (const DivergenceError&) {
          warm = zero;
          for (std::size_t e : group) fold_failures[t * ne + e] += 1;
          continue;
        }
        for (std::size_t k = 0; k < group.size(); ++k) {
          const std::size_t e = group[k];
          try {
            const FitResult fit = composite_gd(targets[k], estimators[e].penalty_spec(lambda), opt.solver, start);
            const Vector resid = te.response() - te.design() * fit.beta;
            for (std::size_t i = 0; i < sq.size(); ++i) {
              const double d = resid(static_cast<Eigen::Index>(i));
              sq[i] = d * d;
            }
            fold_scores[((e * na + a) * nl + li) * nf + f] = trimmed_mspe(sq, opt.trim);
          } catch (const DivergenceError&) {
            fold_failures[t * ne + e] += 1;
          }
        }
      }
    }
  };
  parallel_for(nf * na, opt.threads, task);

  std::vector<CVResult> out(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    CVResult& res = out[e];
    res.scores.resize(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nl));
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t l = 0; l < nl; ++l) {
        double s = 0.0;
        for (std::size_t f = 0; f < nf; ++f) s += fold_scores[((e * na + a) * nl + l) * nf + f];
        res.scores(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(l)) = s / static_cast<double>(nf);
      }
    const auto [bi, bj] = select_best(res.scores);
    res.best_alpha_index = bi;
    res.best_lambda_index = bj;
    res.best_alpha = grid.alphas[static_cast<std::size_t>(bi)];
    res.best_lambda = grid.lambdas[static_cast<std::size_t>(bj)];
    res.fold_assignment = folds;
    for (std::size_t t = 0; t < nf * na; ++t) res.failed_fits += fold_failures[t * ne + e];
  }
  return out;
}

inline CVResult cross_validate(const Dataset& data, const TuningGrid& grid, const EstimatorSpec& estimator,
                               const CVOptions& opt) {
  return cross_validate_many(data, grid, std::span<const EstimatorSpec>(&estimator, 1), opt).front();
}

/// Two-step fit of `estimator` on the full data at (alpha, lambda); step 1
/// uses the same pair unless `opt` fixes it.
inline FitResult fit_estimator(const Dataset& data, const EstimatorSpec& estimator, double alpha, double lambda,
                               const SolverConfig& solver, const CVOptions* opt = nullptr) {
  const bool fixed = opt && opt->step1_mode == Step1Mode::Fixed;
  const WeightedLoss target(data, estimator.loss_spec(alpha), estimator.weight);
  const WeightedLoss init(data, {LossFamily::Huber, fixed ? opt->step1_alpha : alpha}, estimator.weight);
  return two_step_fit(target, estimator.penalty_spec(lambda), init, fixed ? opt->step1_lambda : lambda, solver);
}

}  // namespace pram
