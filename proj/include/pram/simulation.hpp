// Monte-Carlo harness: the three regression designs (homogeneous Gaussian,
// heteroscedastic, chi-square contaminated covariates), five centred error
// laws, estimation/selection metrics and replicated studies.
#pragma once

#include "pram/core.hpp"
#include "pram/estimator.hpp"
#include "pram/parallel.hpp"
#include "pram/random.hpp"
#include "pram/tuning.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pram {

enum class Design { HomogeneousGaussian, Heteroscedastic, ContaminatedChiSq };
enum class ErrorLaw { Normal04, ScaledT3, MixN, LogNormal13, Weibull };
enum class ContaminationMode { Rows, Entries };

inline std::string_view to_string(Design d) {
  switch (d) {
    case Design::HomogeneousGaussian: return "ex1";
    case Design::Heteroscedastic: return "ex2";
    case Design::ContaminatedChiSq: return "ex3";
  }
  return "?";
}

inline Design parse_design(std::string_view s) {
  if (s == "ex1") return Design::HomogeneousGaussian;
  if (s == "ex2") return Design::Heteroscedastic;
  if (s == "ex3") return Design::ContaminatedChiSq;
  throw std::invalid_argument("unknown scenario: " + std::string(s));
}

inline std::string_view to_string(ErrorLaw e) {
  switch (e) {
    case ErrorLaw::Normal04: return "normal";
    case ErrorLaw::ScaledT3: return "t3";
    case ErrorLaw::MixN: return "mixn";
    case ErrorLaw::LogNormal13: return "lognormal";
    case ErrorLaw::Weibull: return "weibull";
  }
  return "?";
}

inline ErrorLaw parse_error_law(std::string_view s) {
  if (s == "normal") return ErrorLaw::Normal04;
  if (s == "t3") return ErrorLaw::ScaledT3;
  if (s == "mixn") return ErrorLaw::MixN;
  if (s == "lognormal") return ErrorLaw::LogNormal13;
  if (s == "weibull") return ErrorLaw::Weibull;
  throw std::invalid_argument("unknown error law: " + std::string(s));
}

/// (3 x5, 2 x5, 1.5 x5, 0 x(p-15)).
inline Vector default_beta(int p) {
  detail::require(p >= 15, "default beta needs p >= 15");
  Vector b = Vector::Zero(p);
  b.head(5).setConstant(3.0);
  b.segment(5, 5).setConstant(2.0);
  b.segment(10, 5).setConstant(1.5);
  return b;
}

struct SimScenario {
  Design design = Design::HomogeneousGaussian;
  ErrorLaw error_law = ErrorLaw::Normal04;
  int n = 100;
  int p = 500;
  /// Empty means default_beta(p).
  Vector beta_true;
  double contamination_fraction = 0.2;
  int chi_df = 10;
  ContaminationMode contamination_mode = ContaminationMode::Rows;
  /// Test hooks: force the heteroscedastic multiplier to 1 / drop the noise.
  bool unit_multiplier = false;
  bool zero_noise = false;

  Vector beta() const { return beta_true.size() > 0 ? beta_true : default_beta(p); }
  std::string label() const { return std::string(to_string(design)) + "/" + std::string(to_string(error_law)); }
};

inline void validate(const SimScenario& s) {
  detail::require(s.n >= 1 && s.p >= 1, "scenario: n and p must be positive");
  detail::require(s.contamination_fraction >= 0.0 && s.contamination_fraction <= 1.0,
                  "scenario: contamination fraction must lie in [0, 1]");
  detail::require(s.chi_df >= 1, "scenario: chi-square df must be positive");
  detail::require(s.beta().size() == s.p, "scenario: beta_true length does not match p");
}

/// Population mean subtracted from the raw draws.
inline double error_centering(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::Normal04: return 0.0;
    case ErrorLaw::ScaledT3: return 0.0;
    case ErrorLaw::MixN: return 0.5 * -1.0 + 0.5 * 8.0;
    case ErrorLaw::LogNormal13: return std::exp(1.3 * 1.3 / 2.0);
    case ErrorLaw::Weibull: return 0.15 * std::tgamma(1.0 + 1.0 / 0.3);
  }
  return 0.0;
}

inline Vector gen_errors(ErrorLaw law, int n, Engine& rng) {
  detail::require(n >= 1, "gen_errors: need n >= 1");
  const double centre = error_centering(law);
  Vector e(n);
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    switch (law) {
      case ErrorLaw::Normal04: v = draw_normal(rng, 0.0, 2.0); break;
      case ErrorLaw::ScaledT3: v = std::sqrt(2.0) * draw_student_t(rng, 3.0); break;
      case ErrorLaw::MixN:
        v = draw_uniform01(rng) < 0.5 ? draw_normal(rng, -1.0, 2.0) : draw_normal(rng, 8.0, 1.0);
        break;
      case ErrorLaw::LogNormal13: v = std::exp(1.3 * draw_normal(rng)); break;
      case ErrorLaw::Weibull: v = draw_weibull(rng, 0.3, 0.15); break;
    }
    e(i) = v - centre;
  }
  return e;
}

inline Matrix gen_design(const SimScenario& s, Engine& rng) {
  validate(s);
  Matrix x(s.n, s.p);
  // Row-major fill keeps one observation's draws contiguous in the stream.
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.p; ++j) x(i, j) = draw_normal(rng);
  if (s.design != Design::ContaminatedChiSq || s.contamination_fraction == 0.0) return x;

  const double df = s.chi_df;
  if (s.contamination_mode == ContaminationMode::Rows) {
    const auto m = static_cast<std::size_t>(std::ceil(s.contamination_fraction * s.n - 1e-12));
    const auto perm = random_permutation(rng, static_cast<std::size_t>(s.n));
    for (std::size_t k = 0; k < m; ++k)
      for (int j = 0; j < s.p; ++j) x(static_cast<Eigen::Index>(perm[k]), j) = draw_chi_squared(rng, df) - df;
  } else {
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.p; ++j)
        if (draw_uniform01(rng) < s.contamination_fraction) x(i, j) = draw_chi_squared(rng, df) - df;
  }
  return x;
}

struct SimData {
  Dataset data;
  Vector beta_true;
};

/// c = sqrt(3) * ||beta||_2^2, so E[(c^{-1}(x'beta)^2)^2] = 1 for x ~ N(0, I).
inline double heteroscedastic_scale(const Vector& beta) { return std::sqrt(3.0) * beta.squaredNorm(); }

inline SimData gen_dataset(const SimScenario& s, Engine& rng) {
  validate(s);
  const Vector beta = s.beta();
  Matrix x = gen_design(s, rng);
  Vector eps = s.zero_noise ? Vector::Zero(s.n) : gen_errors(s.error_law, s.n, rng);
  Vector mean = x * beta;
  Vector y = mean;
  if (s.design == Design::Heteroscedastic && !s.unit_multiplier) {
    const double c = heteroscedastic_scale(beta);
    y.array() += mean.array().square() / c * eps.array();
  } else {
    y += eps;
  }
  return {Dataset(std::move(x), std::move(y)), beta};
}

struct SelectionMetrics {
  double l2_error = 0.0;
  double l1_error = 0.0;
  int model_size = 0;
  double fpr_percent = 0.0;
  double fnr_percent = 0.0;
};

/// Selected set = exact nonzeros of beta_hat. FPR/FNR are 0 when S^c / S is empty.
inline SelectionMetrics selection_metrics(const Eigen::Ref<const Vector>& beta_hat,
                                          const Eigen::Ref<const Vector>& beta_true) {
  detail::require(beta_hat.size() == beta_true.size(), "selection_metrics: length mismatch");
  SelectionMetrics m;
  const Vector d = beta_hat - beta_true;
  m.l2_error = d.norm();
  m.l1_error = d.lpNorm<1>();
  int true_support = 0, false_pos = 0, false_neg = 0;
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const bool sel = beta_hat(j) != 0.0;
    const bool imp = beta_true(j) != 0.0;
    m.model_size += sel;
    true_support += imp;
    false_pos += sel && !imp;
    false_neg += !sel && imp;
  }
  const int nulls = static_cast<int>(beta_hat.size()) - true_support;
  m.fpr_percent = nulls > 0 ? 100.0 * false_pos / nulls : 0.0;
  m.fnr_percent = true_support > 0 ? 100.0 * false_neg / true_support : 0.0;
  return m;
}

struct StudyConfig {
  std::vector<SimScenario> scenarios;
  std::vector<EstimatorSpec> estimators;
  int replicates = 1;
  int folds = 10;
  int grid_alpha = 10;
  int grid_lambda = 10;
  double trim = 0.1;
  SolverConfig solver{};
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
};

struct ReplicateOutcome {
  int replicate = 0;
  bool ok = false;
  std::string error;
  SelectionMetrics metrics;
  double alpha = 0.0;
  double lambda = 0.0;
  bool converged = false;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

struct StudyRecord {
  std::string scenario;
  std::string estimator;
  std::vector<ReplicateOutcome> outcomes;
  int n_ok = 0;
  int n_failed = 0;
  MetricSummary l2, l1, model_size, fpr, fnr;
};

struct StudySummary {
  std::uint64_t master_seed = 0;
  int replicates = 0;
  std::vector<StudyRecord> records;

  const StudyRecord* find(std::string_view scenario, std::string_view estimator) const {
    for (const auto& r : records)
      if (r.scenario == scenario && r.estimator == estimator) return &r;
    return nullptr;
  }
};

/// Stream for replicate `rep` of a scenario; depends only on the scenario's
/// generative identity, never on how many replicates or scenarios run.
inline Engine replicate_stream(std::uint64_t master_seed, const SimScenario& s, int rep) {
  return make_stream(master_seed, {static_cast<std::uint64_t>(s.design), static_cast<std::uint64_t>(s.error_law),
                                   static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.p),
                                   static_cast<std::uint64_t>(rep)});
}

namespace detail {

inline MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace detail

/// One replicate: generate data, cross-validate every estimator on shared
/// folds, refit at the selected (alpha, lambda) and score against beta_true.
inline std::vector<ReplicateOutcome> run_replicate(const SimScenario& scenario,
                                                   const std::vector<EstimatorSpec>& estimators,
                                                   const StudyConfig& cfg, int rep) {
  std::vector<ReplicateOutcome> out(estimators.size());
  for (auto& o : out) o.replicate = rep;
  Engine rng = replicate_stream(cfg.master_seed, scenario, rep);
  const SimData sim = gen_dataset(scenario, rng);
  const std::uint64_t cv_seed = rng();

  const TuningGrid grid = default_grid(scenario.n, scenario.p, cfg.grid_alpha, cfg.grid_lambda);
  CVOptions opt;
  opt.folds = cfg.folds;
  opt.trim = cfg.trim;
  opt.solver = cfg.solver;
  opt.seed = cv_seed;
  opt.threads = 1;
  std::vector<CVResult> cv;
  try {
    cv = cross_validate_many(sim.data, grid, estimators, opt);
  } catch (const std::exception& e) {
    for (auto& o : out) o.error = e.what();
    return out;
  }
  for (std::size_t k = 0; k < estimators.size(); ++k) {
    ReplicateOutcome& o = out[k];
    o.alpha = cv[k].best_alpha;
    o.lambda = cv[k].best_lambda;
    try {
      if (!std::isfinite(cv[k].scores(cv[k].best_alpha_index, cv[k].best_lambda_index)))
        throw DivergenceError("every grid cell diverged");
      const FitResult fit = fit_estimator(sim.data, estimators[k], o.alpha, o.lambda, cfg.solver);
      o.metrics = selection_metrics(fit.beta, sim.beta_true);
      o.converged = fit.converged;
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  }
  return out;
}

inline StudySummary run_study(const StudyConfig& cfg) {
  detail::require(cfg.replicates >= 1, "run_study: need at least one replicate");
  detail::require(!cfg.scenarios.empty() && !cfg.estimators.empty(), "run_study: empty scenario/estimator list");
  for (const auto& s : cfg.scenarios) validate(s);

  const std::size_t ns = cfg.scenarios.size();
  const auto nr = static_cast<std::size_t>(cfg.replicates);
  std::vector<std::vector<ReplicateOutcome>> results(ns * nr);
  parallel_for(ns * nr, resolve_threads(cfg.threads), [&](std::size_t t) {
    const std::size_t s = t / nr, r = t % nr;
    results[t] = run_replicate(cfg.scenarios[s], cfg.estimators, cfg, static_cast<int>(r));
  });

  StudySummary summary;
  summary.master_seed = cfg.master_seed;
  summary.replicates = cfg.replicates;
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      StudyRecord rec;
      rec.scenario = cfg.scenarios[s].label();
      rec.estimator = cfg.estimators[e].name();
      std::vector<double> l2, l1, ms, fpr, fnr;
      for (std::size_t r = 0; r < nr; ++r) {
        const ReplicateOutcome& o = results[s * nr + r][e];
        rec.outcomes.push_back(o);
        if (!o.ok) {
          ++rec.n_failed;
          continue;
        }
        ++rec.n_ok;
        l2.push_back(o.metrics.l2_error);
        l1.push_back(o.metrics.l1_error);
        ms.push_back(o.metrics.model_size);
        fpr.push_back(o.metrics.fpr_percent);
        fnr.push_back(o.metrics.fnr_percent);
      }
      rec.l2 = detail::summarize(l2);
      rec.l1 = detail::summarize(l1);
      rec.model_size = detail::summarize(ms);
      rec.fpr = detail::summarize(fpr);
      rec.fnr = detail::summarize(fnr);
      summary.records.push_back(std::move(rec));
    }
  return summary;
}

}  // namespace pram
