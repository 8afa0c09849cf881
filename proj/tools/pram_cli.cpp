// pram: command-line front end.
//
//   pram fit       --input data.csv --alpha A --lambda L [--loss ... --penalty ...]
//   pram cv        --input data.csv [--grid-alpha 10 --grid-lambda 10 --folds 10]
//   pram simulate  --seed S [--scenario ex1 --error-law normal --replicates 1]
//   pram predict   --model fit.json --input new.csv
//   pram rpe       --input data.csv --seed S [--estimators HA-MCP,CA-MCP]
//   pram prescreen --input data.csv --p1 2000 --p2 500 --csv-out screened.csv
//
// Every command writes a JSON report (to --out, or stdout) that embeds the
// fully resolved configuration. Failures exit nonzero with a JSON error
// object on stderr.
#include "pram/pram.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using pram::json;
using pram::RunConfig;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidArgument = 2,
  kInputError = 3,
  kDivergence = 4,
  kSingular = 5,
};

void emit(const RunConfig& cfg, const json& report) {
  if (cfg.out.empty())
    std::cout << report.dump(2) << "\n";
  else
    pram::write_json_atomic(cfg.out, report);
}

pram::EstimatorSpec estimator_from_flags(const RunConfig& cfg) {
  return pram::make_estimator(pram::parse_loss_family(cfg.loss), pram::parse_penalty_family(cfg.penalty),
                              cfg.weight_spec());
}

std::vector<pram::EstimatorSpec> estimators_from_names(const std::vector<std::string>& names, double cap) {
  std::vector<pram::EstimatorSpec> out;
  for (const auto& n : names) out.push_back(pram::parse_estimator(n, cap));
  return out;
}

struct PreparedData {
  pram::Dataset fit_data;
  std::optional<pram::Standardizer> standardizer;
};

PreparedData prepare(const RunConfig& cfg) {
  pram::Dataset d = pram::load_csv(cfg.input, cfg.response);
  if (!cfg.standardize) return {std::move(d), std::nullopt};
  auto s = pram::Standardizer::fit(d);
  return {s.apply(d), s};
}

void add_coefficients(json& report, const PreparedData& pd, const pram::Vector& beta) {
  if (pd.standardizer) {
    const pram::Vector orig = pd.standardizer->coefficients(beta);
    report["coefficients"] = pram::sparse_coefficients(orig, pd.fit_data.column_names());
    report["intercept"] = pd.standardizer->intercept(orig);
  } else {
    report["coefficients"] = pram::sparse_coefficients(beta, pd.fit_data.column_names());
    report["intercept"] = 0.0;
  }
  int nnz = 0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) nnz += beta(j) != 0.0;
  report["model_size"] = nnz;
  report["p"] = beta.size();
}

int run_fit(RunConfig& cfg) {
  if (!cfg.alpha || !cfg.lambda) throw std::invalid_argument("fit requires --alpha and --lambda");
  const PreparedData pd = prepare(cfg);
  const auto est = estimator_from_flags(cfg);
  const auto fit = pram::fit_estimator(pd.fit_data, est, *cfg.alpha, *cfg.lambda, cfg.solver());
  json report = pram::report_envelope(cfg);
  report["estimator"] = est.name();
  report["diagnostics"] = pram::to_json(fit);
  report["objective_trace_length"] = fit.objective_trace.size();
  add_coefficients(report, pd, fit.beta);
  emit(cfg, report);
  return kOk;
}

int run_cv(RunConfig& cfg) {
  if (!cfg.seed) cfg.seed = 1;
  const PreparedData pd = prepare(cfg);
  const auto est = estimator_from_flags(cfg);
  const auto grid = pram::default_grid(static_cast<int>(pd.fit_data.n()), static_cast<int>(pd.fit_data.p()),
                                       cfg.grid_alpha, cfg.grid_lambda);
  pram::CVOptions opt;
  opt.folds = cfg.folds;
  opt.trim = cfg.trim;
  opt.solver = cfg.solver();
  opt.seed = *cfg.seed;
  opt.threads = pram::resolve_threads(cfg.threads);
  const auto cv = pram::cross_validate(pd.fit_data, grid, est, opt);
  const auto fit = pram::fit_estimator(pd.fit_data, est, cv.best_alpha, cv.best_lambda, cfg.solver());
  json report = pram::report_envelope(cfg);
  report["estimator"] = est.name();
  report["cv"] = pram::to_json(cv, grid);
  report["diagnostics"] = pram::to_json(fit);
  add_coefficients(report, pd, fit.beta);
  emit(cfg, report);
  return kOk;
}

std::vector<std::string> default_estimators(pram::Design d) {
  if (d == pram::Design::ContaminatedChiSq) return {"HA-MCP", "WHA-MCP", "TA-MCP", "WTA-MCP", "CA-MCP", "WCA-MCP"};
  return {"HA-Lasso", "TA-Lasso", "CA-Lasso", "HA-MCP", "TA-MCP", "CA-MCP"};
}

int run_simulate(RunConfig& cfg, const std::string& profile) {
  if (!cfg.seed) throw std::invalid_argument("simulate requires --seed");
  std::vector<std::pair<pram::SimScenario, std::vector<std::string>>> plan;
  auto make = [&](pram::Design d, pram::ErrorLaw e) {
    pram::SimScenario s;
    s.design = d;
    s.error_law = e;
    s.n = cfg.n;
    s.p = cfg.p;
    return s;
  };
  if (profile == "full") {
    cfg.replicates = 100;
    for (auto d : {pram::Design::HomogeneousGaussian, pram::Design::Heteroscedastic, pram::Design::ContaminatedChiSq})
      for (auto e : {pram::ErrorLaw::Normal04, pram::ErrorLaw::ScaledT3, pram::ErrorLaw::MixN,
                     pram::ErrorLaw::LogNormal13, pram::ErrorLaw::Weibull})
        plan.emplace_back(make(d, e), default_estimators(d));
  } else {
    const auto d = pram::parse_design(cfg.scenario);
    plan.emplace_back(make(d, pram::parse_error_law(cfg.error_law)),
                      cfg.estimators.empty() ? default_estimators(d) : cfg.estimators);
  }

  json records = json::array();
  for (const auto& [scenario, names] : plan) {
    pram::StudyConfig sc;
    sc.scenarios = {scenario};
    sc.estimators = estimators_from_names(names, cfg.cap);
    sc.replicates = cfg.replicates;
    sc.folds = cfg.folds;
    sc.grid_alpha = cfg.grid_alpha;
    sc.grid_lambda = cfg.grid_lambda;
    sc.trim = cfg.trim;
    sc.solver = cfg.solver();
    sc.master_seed = *cfg.seed;
    sc.threads = cfg.threads;
    const auto summary = pram::run_study(sc);
    const json sj = pram::to_json(summary);
    for (const auto& r : sj.at("records")) records.push_back(r);
  }
  json report = pram::report_envelope(cfg);
  report["profile"] = profile;
  report["master_seed"] = *cfg.seed;
  report["replicates"] = cfg.replicates;
  report["records"] = records;
  emit(cfg, report);
  return kOk;
}

int run_predict(RunConfig& cfg) {
  if (cfg.model.empty()) throw std::invalid_argument("predict requires --model");
  std::ifstream in(cfg.model);
  if (!in) throw pram::CsvError("cannot open model file: " + cfg.model);
  const json model = json::parse(in);
  const pram::Table table = pram::read_table(cfg.input);

  const auto& coefs = model.at("coefficients");
  pram::Vector beta(static_cast<Eigen::Index>(coefs.size()));
  pram::Matrix x(table.values.rows(), beta.size());
  Eigen::Index k = 0;
  for (auto it = coefs.begin(); it != coefs.end(); ++it, ++k) {
    const auto col = std::find(table.header.begin(), table.header.end(), it.key());
    if (col == table.header.end()) throw pram::CsvError("missing column '" + it.key() + "'", 0, it.key());
    x.col(k) = table.values.col(col - table.header.begin());
    beta(k) = it.value().get<double>();
  }
  pram::Vector yhat = pram::predict(beta, x);
  yhat.array() += model.value("intercept", 0.0);

  json report = pram::report_envelope(cfg);
  report["predictions"] = pram::to_std(yhat);
  emit(cfg, report);
  return kOk;
}

int run_rpe(RunConfig& cfg) {
  if (!cfg.seed) throw std::invalid_argument("rpe requires --seed");
  const PreparedData pd = prepare(cfg);
  std::vector<std::string> names =
      cfg.estimators.empty() ? std::vector<std::string>{"HA-Lasso", "CA-Lasso", "HA-MCP", "CA-MCP"} : cfg.estimators;
  pram::RpeOptions opt;
  opt.n_test = cfg.n_test;
  opt.n_splits = cfg.splits;
  opt.seed = *cfg.seed;
  opt.grid_alpha = cfg.grid_alpha;
  opt.grid_lambda = cfg.grid_lambda;
  opt.folds = cfg.folds;
  opt.trim = cfg.trim;
  opt.solver = cfg.solver();
  opt.fixed_tuning = cfg.fixed_tuning;
  opt.threads = pram::resolve_threads(cfg.threads);
  const auto rep = pram::rpe_eval(pd.fit_data, estimators_from_names(names, cfg.cap),
                                  pram::parse_estimator(cfg.baseline, cfg.cap), opt);
  json report = pram::report_envelope(cfg);
  report["rpe"] = pram::to_json(rep);
  emit(cfg, report);
  return kOk;
}

int run_prescreen(RunConfig& cfg) {
  const pram::Dataset d = pram::load_csv(cfg.input, cfg.response);
  const auto res = pram::prescreen(d, cfg.p1, cfg.p2);
  if (!cfg.csv_out.empty()) pram::save_csv(res.data, cfg.csv_out, cfg.response);
  json report = pram::report_envelope(cfg);
  json kept = json::array();
  for (auto j : res.kept) kept.push_back(d.column_names()[static_cast<std::size_t>(j)]);
  report["kept_columns"] = kept;
  report["n"] = d.n();
  report["p_in"] = d.p();
  report["p_out"] = res.data.p();
  emit(cfg, report);
  return kOk;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--out", cfg.out, "Report path (stdout when omitted)");
  sub->add_option("--radius", cfg.radius, "l1 side-constraint radius")->capture_default_str();
  sub->add_option("--max-iter", cfg.max_iter, "Solver iteration cap")->capture_default_str();
  sub->add_option("--tol", cfg.tol, "Relative objective-change tolerance")->capture_default_str();
  sub->add_option("--threads", cfg.threads, "Worker threads (0: PRAM_THREADS or auto)")->capture_default_str();
}

void add_data(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--input", cfg.input, "CSV with header")->required()->check(CLI::ExistingFile);
  sub->add_option("--response", cfg.response, "Response column name")->capture_default_str();
}

void add_estimator(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--loss", cfg.loss, "Loss family")
      ->check(CLI::IsMember({"huber", "tukey", "cauchy", "quadratic"}))
      ->capture_default_str();
  sub->add_option("--penalty", cfg.penalty, "Penalty family")
      ->check(CLI::IsMember({"lasso", "scad", "mcp"}))
      ->capture_default_str();
  sub->add_option("--weight", cfg.weight, "Row weights")->check(CLI::IsMember({"none", "infcap"}))->capture_default_str();
  sub->add_option("--cap", cfg.cap, "Cap c in w(x) = min{1, c/||x||_inf}")->capture_default_str();
}

void add_tuning(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--grid-alpha", cfg.grid_alpha, "Alpha grid points")->capture_default_str();
  sub->add_option("--grid-lambda", cfg.grid_lambda, "Lambda grid points")->capture_default_str();
  sub->add_option("--folds", cfg.folds, "Cross-validation folds")->capture_default_str();
  sub->add_option("--trim", cfg.trim, "Trimmed fraction of held-out squared errors")->capture_default_str();
}

json error_object(const char* type, const std::string& message) {
  return {{"error", {{"type", type}, {"message", message}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized robust approximated quadratic M-estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pram::kVersion);
  RunConfig cfg;
  std::string profile = "desk";

  auto* fit = app.add_subcommand("fit", "Two-step fit at a given (alpha, lambda)");
  add_data(fit, cfg);
  add_estimator(fit, cfg);
  add_common(fit, cfg);
  fit->add_option("--alpha", cfg.alpha, "Robustness parameter");
  fit->add_option("--lambda", cfg.lambda, "Penalty level");
  fit->add_flag("--standardize", cfg.standardize, "Standardize columns, centre the response");

  auto* cv = app.add_subcommand("cv", "Cross-validated (alpha, lambda) selection and refit");
  add_data(cv, cfg);
  add_estimator(cv, cfg);
  add_tuning(cv, cfg);
  add_common(cv, cfg);
  cv->add_option("--seed", cfg.seed, "Fold seed (default 1)");
  cv->add_flag("--standardize", cfg.standardize, "Standardize columns, centre the response");

  auto* sim = app.add_subcommand("simulate", "Replicated simulation study");
  add_tuning(sim, cfg);
  add_common(sim, cfg);
  sim->add_option("--seed", cfg.seed, "Master seed")->required();
  sim->add_option("--replicates", cfg.replicates, "Replicates per scenario")->capture_default_str();
  sim->add_option("--scenario", cfg.scenario, "Design")->check(CLI::IsMember({"ex1", "ex2", "ex3"}))->capture_default_str();
  sim->add_option("--error-law", cfg.error_law, "Error law")
      ->check(CLI::IsMember({"normal", "t3", "mixn", "lognormal", "weibull"}))
      ->capture_default_str();
  sim->add_option("--estimators", cfg.estimators, "Estimator names, e.g. HA-Lasso,WTA-MCP")->delimiter(',');
  sim->add_option("--cap", cfg.cap, "Cap for W-prefixed estimators")->capture_default_str();
  sim->add_option("--n", cfg.n, "Sample size")->capture_default_str();
  sim->add_option("--p", cfg.p, "Dimension")->capture_default_str();
  sim->add_option("--profile", profile, "desk | full")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();

  auto* pred = app.add_subcommand("predict", "Linear predictions from a fit/cv report");
  pred->add_option("--model", cfg.model, "Report JSON written by fit or cv")->required()->check(CLI::ExistingFile);
  pred->add_option("--input", cfg.input, "CSV whose columns include the model's covariates")
      ->required()
      ->check(CLI::ExistingFile);
  pred->add_option("--out", cfg.out, "Report path (stdout when omitted)");

  auto* rpe = app.add_subcommand("rpe", "Random-split relative prediction error against a baseline");
  add_data(rpe, cfg);
  add_tuning(rpe, cfg);
  add_common(rpe, cfg);
  rpe->add_option("--seed", cfg.seed, "Split seed")->required();
  rpe->add_option("--estimators", cfg.estimators, "Estimator names")->delimiter(',');
  rpe->add_option("--baseline", cfg.baseline, "Baseline estimator")->capture_default_str();
  rpe->add_option("--cap", cfg.cap, "Cap for W-prefixed estimators")->capture_default_str();
  rpe->add_option("--n-test", cfg.n_test, "Test observations per split")->capture_default_str();
  rpe->add_option("--splits", cfg.splits, "Number of random splits")->capture_default_str();
  rpe->add_flag("--fixed-tuning", cfg.fixed_tuning, "Tune once on the full data");
  rpe->add_flag("--standardize", cfg.standardize, "Standardize columns, centre the response");

  auto* pre = app.add_subcommand("prescreen", "Variance then correlation screening of columns");
  add_data(pre, cfg);
  pre->add_option("--p1", cfg.p1, "Columns kept by variance")->required();
  pre->add_option("--p2", cfg.p2, "Columns kept by |correlation| among those")->required();
  pre->add_option("--csv-out", cfg.csv_out, "Screened CSV output");
  pre->add_option("--out", cfg.out, "Report path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_object("usage", e.what()).dump() << "\n";
    return kInvalidArgument;
  }

  try {
    if (fit->parsed()) return (cfg.command = "fit", run_fit(cfg));
    if (cv->parsed()) return (cfg.command = "cv", run_cv(cfg));
    if (sim->parsed()) return (cfg.command = "simulate", run_simulate(cfg, profile));
    if (pred->parsed()) return (cfg.command = "predict", run_predict(cfg));
    if (rpe->parsed()) return (cfg.command = "rpe", run_rpe(cfg));
    if (pre->parsed()) return (cfg.command = "prescreen", run_prescreen(cfg));
  } catch (const pram::CsvError& e) {
    json err = error_object("input", e.what());
    if (e.row() > 0) err["error"]["row"] = e.row();
    if (!e.column().empty()) err["error"]["column"] = e.column();
    std::cerr << err.dump() << "\n";
    return kInputError;
  } catch (const pram::DivergenceError& e) {
    std::cerr << error_object("divergence", e.what()).dump() << "\n";
    return kDivergence;
  } catch (const pram::SingularMatrixError& e) {
    json err = error_object("singular", e.what());
    err["error"]["condition_number"] = e.condition_number();
    std::cerr << err.dump() << "\n";
    return kSingular;
  } catch (const std::invalid_argument& e) {
    std::cerr << error_object("invalid_argument", e.what()).dump() << "\n";
    return kInvalidArgument;
  } catch (const std::exception& e) {
    std::cerr << error_object("failure", e.what()).dump() << "\n";
    return kFailure;
  }
  return kFailure;
}
