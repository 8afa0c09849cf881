// Data ingestion, prescreening, prediction, the random-split relative
// prediction error protocol and JSON reports.
//
// CSV dialect: comma separated, UTF-8, header row required, unquoted numeric
// cells with '.' as decimal separator.
#pragma once

#include "pram/core.hpp"
#include "pram/estimator.hpp"
#include "pram/random.hpp"
#include "pram/simulation.hpp"
#include "pram/tuning.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace pram {

using json = nlohmann::json;

/// Malformed input file. `row` is the 1-based data row (0 for the header),
/// `column` the header name when known.
class CsvError : public std::runtime_error {
public:
  CsvError(const std::string& what, std::size_t row = 0, std::string column = {})
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

private:
  std::size_t row_;
  std::string column_;
};

struct Table {
  std::vector<std::string> header;
  Matrix values;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim_ws(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty file: " + path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  Table t;
  for (auto cell : detail::split_commas(line)) t.header.emplace_back(detail::trim_ws(cell));
  for (const auto& h : t.header)
    if (h.empty()) throw CsvError("empty column name in header", 0);

  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (detail::trim_ws(line).empty()) continue;
    ++rows;
    const auto parts = detail::split_commas(line);
    if (parts.size() != t.header.size())
      throw CsvError("row " + std::to_string(rows) + ": expected " + std::to_string(t.header.size()) +
                         " cells, found " + std::to_string(parts.size()),
                     rows);
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const auto cell = detail::trim_ws(parts[j]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw CsvError("row " + std::to_string(rows) + ", column '" + t.header[j] + "': cannot parse '" +
                           std::string(cell) + "' as a finite number",
                       rows, t.header[j]);
      cells.push_back(v);
    }
  }
  t.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i * t.header.size() + j];
  return t;
}

inline Dataset load_csv(const std::filesystem::path& path, const std::string& response_column) {
  Table t = read_table(path);
  const auto it = std::find(t.header.begin(), t.header.end(), response_column);
  if (it == t.header.end()) throw CsvError("missing response column '" + response_column + "'", 0, response_column);
  if (t.values.rows() < 2) throw CsvError("need at least 2 data rows");
  if (t.header.size() < 2) throw CsvError("need at least one covariate column");
  const auto ycol = static_cast<Eigen::Index>(it - t.header.begin());
  std::vector<std::string> names;
  Matrix x(t.values.rows(), t.values.cols() - 1);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
    if (j == ycol) continue;
    x.col(k++) = t.values.col(j);
    names.push_back(t.header[static_cast<std::size_t>(j)]);
  }
  return Dataset(std::move(x), t.values.col(ycol), std::move(names));
}

/// Writes `text` to a sibling temporary file, then renames it over `path`.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Response first, then covariates; shortest round-trip decimal for every value.
inline void save_csv(const Dataset& data, const std::filesystem::path& path, const std::string& response_name = "y") {
  std::string text = response_name;
  for (const auto& c : data.column_names()) text += "," + c;
  text += "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    text += detail::format_double(data.response()(i));
    for (Eigen::Index j = 0; j < data.p(); ++j) text += "," + detail::format_double(data.design()(i, j));
    text += "\n";
  }
  write_text_atomic(path, text);
}

struct PrescreenResult {
  Dataset data;
  /// Surviving original column indices, ascending.
  std::vector<Eigen::Index> kept;
};

/// Keep the p1 highest-variance columns, then the p2 of those most
/// correlated (in absolute value) with the response. Ties go to the lower
/// original index; survivors keep their original order.
inline PrescreenResult prescreen(const Dataset& data, int p1, int p2) {
  detail::require(p2 >= 1 && p2 <= p1 && p1 <= data.p(), "prescreen: need 1 <= p2 <= p1 <= p");
  detail::require(data.n() >= 2, "prescreen: need n >= 2");
  const Eigen::Index n = data.n();
  const Vector yc = data.response().array() - data.response().mean();
  const double ysd = std::sqrt(yc.squaredNorm());
  detail::require(ysd > 0.0, "prescreen: constant response, correlation undefined");

  std::vector<double> var(static_cast<std::size_t>(data.p()));
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    const Vector c = data.design().col(j).array() - data.design().col(j).mean();
    var[static_cast<std::size_t>(j)] = c.squaredNorm() / static_cast<double>(n - 1);
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.p()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return var[static_cast<std::size_t>(a)] > var[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(p1));
  std::sort(order.begin(), order.end());

  std::vector<double> corr(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Vector c = data.design().col(order[k]).array() - data.design().col(order[k]).mean();
    const double cn = c.norm();
    corr[k] = cn > 0.0 ? std::abs(c.dot(yc)) / (cn * ysd) : 0.0;
  }
  std::vector<std::size_t> idx(order.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return corr[a] > corr[b]; });
  idx.resize(static_cast<std::size_t>(p2));
  std::vector<Eigen::Index> kept;
  for (std::size_t k : idx) kept.push_back(order[k]);
  std::sort(kept.begin(), kept.end());
  return {data.subset_columns(kept), kept};
}

inline Vector predict(const Eigen::Ref<const Vector>& beta_hat, const Eigen::Ref<const Matrix>& new_design) {
  detail::require(new_design.cols() == beta_hat.size(), "predict: design column count does not match beta length");
  return new_design * beta_hat;
}

/// Optional column standardization (mean 0, variance 1) with the response
/// centred; coefficients map back to the original scale plus an intercept.
struct Standardizer {
  Vector means;
  Vector scales;
  double y_mean = 0.0;

  static Standardizer fit(const Dataset& d) {
    Standardizer s;
    s.means = d.design().colwise().mean().transpose();
    s.scales.resize(d.p());
    for (Eigen::Index j = 0; j < d.p(); ++j) {
      const double sd = std::sqrt((d.design().col(j).array() - s.means(j)).square().sum() /
                                  static_cast<double>(std::max<Eigen::Index>(1, d.n() - 1)));
      s.scales(j) = sd > 0.0 ? sd : 1.0;
    }
    s.y_mean = d.response().mean();
    return s;
  }

  Dataset apply(const Dataset& d) const {
    Matrix x = (d.design().rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
    Vector y = d.response().array() - y_mean;
    return Dataset(std::move(x), std::move(y), d.column_names());
  }

  Vector coefficients(const Vector& beta_std) const { return beta_std.array() / scales.array(); }
  double intercept(const Vector& beta_orig) const { return y_mean - means.dot(beta_orig); }
};

struct RpeOptions {
  int n_test = 6;
  int n_splits = 100;
  std::uint64_t seed = 1;
  int grid_alpha = 10;
  int grid_lambda = 10;
  int folds = 10;
  double trim = 0.1;
  SolverConfig solver{};
  /// Tune (alpha, lambda) once on the full data instead of per split.
  bool fixed_tuning = false;
  unsigned threads = 1;
};

struct RpeSeries {
  std::string estimator;
  /// Test MSPE / baseline test MSPE per split; empty where a fit failed.
  std::vector<std::optional<double>> rpe;
  std::vector<std::optional<double>> mspe;
  int missing = 0;
};

struct RPEReport {
  std::string baseline;
  int n_splits = 0;
  int n_test = 0;
  std::vector<RpeSeries> series;
};

inline RPEReport rpe_eval(const Dataset& data, const std::vector<EstimatorSpec>& estimators,
                          const EstimatorSpec& baseline, const RpeOptions& opt) {
  detail::require(opt.n_test >= 1 && opt.n_test < data.n(), "rpe: need 1 <= n_test < n");
  detail::require(opt.n_splits >= 1, "rpe: need at least one split");

  std::vector<EstimatorSpec> all{baseline};
  for (const auto& e : estimators)
    if (e.name() != baseline.name()) all.push_back(e);
  const std::size_t ne = all.size();
  const auto ns = static_cast<std::size_t>(opt.n_splits);

  CVOptions cvo;
  cvo.folds = opt.folds;
  cvo.trim = opt.trim;
  cvo.solver = opt.solver;

  std::vector<std::pair<double, double>> fixed(ne);
  if (opt.fixed_tuning) {
    cvo.seed = make_stream(opt.seed, {0x66697865u})();
    const auto grid = default_grid(static_cast<int>(data.n()), static_cast<int>(data.p()), opt.grid_alpha,
                                   opt.grid_lambda);
    const auto cv = cross_validate_many(data, grid, all, cvo);
    for (std::size_t e = 0; e < ne; ++e) fixed[e] = {cv[e].best_alpha, cv[e].best_lambda};
  }

  std::vector<std::vector<std::optional<double>>> mspe(ne, std::vector<std::optional<double>>(ns));
  parallel_for(ns, resolve_threads(opt.threads), [&](std::size_t s) {
    Engine rng = make_stream(opt.seed, {0x72706500u, static_cast<std::uint64_t>(s)});
    const auto perm = random_permutation(rng, static_cast<std::size_t>(data.n()));
    std::vector<Eigen::Index> test(perm.begin(), perm.begin() + opt.n_test);
    std::vector<Eigen::Index> train(perm.begin() + opt.n_test, perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    const Dataset tr = data.subset_rows(train);
    const Dataset te = data.subset_rows(test);

    std::vector<std::pair<double, double>> tuned = fixed;
    std::vector<bool> tuned_ok(ne, true);
    if (!opt.fixed_tuning) {
      CVOptions local = cvo;
      local.seed = rng();
      try {
        const auto grid = default_grid(static_cast<int>(tr.n()), static_cast<int>(tr.p()), opt.grid_alpha,
                                       opt.grid_lambda);
        const auto cv = cross_validate_many(tr, grid, all, local);
        for (std::size_t e = 0; e < ne; ++e) {
          tuned[e] = {cv[e].best_alpha, cv[e].best_lambda};
          tuned_ok[e] = std::isfinite(cv[e].scores(cv[e].best_alpha_index, cv[e].best_lambda_index));
        }
      } catch (const std::exception&) {
        std::fill(tuned_ok.begin(), tuned_ok.end(), false);
      }
    }
    for (std::size_t e = 0; e < ne; ++e) {
      if (!tuned_ok[e]) continue;
      try {
        const FitResult fit = fit_estimator(tr, all[e], tuned[e].first, tuned[e].second, opt.solver);
        mspe[e][s] = (te.response() - predict(fit.beta, te.design())).squaredNorm() / static_cast<double>(te.n());
      } catch (const std::exception&) {
      }
    }
  });

  RPEReport rep;
  rep.baseline = baseline.name();
  rep.n_splits = opt.n_splits;
  rep.n_test = opt.n_test;
  for (std::size_t e = 0; e < ne; ++e) {
    RpeSeries ser;
    ser.estimator = all[e].name();
    for (std::size_t s = 0; s < ns; ++s) {
      ser.mspe.push_back(mspe[e][s]);
      std::optional<double> r;
      if (mspe[e][s] && mspe[0][s] && *mspe[0][s] > 0.0) r = *mspe[e][s] / *mspe[0][s];
      if (!r) ++ser.missing;
      ser.rpe.push_back(r);
    }
    rep.series.push_back(std::move(ser));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

/// Every knob a CLI run can take, with defaults materialized.
struct RunConfig {
  std::string command;
  std::string input;
  std::string response = "y";
  std::string loss = "huber";
  std::string penalty = "lasso";
  std::string weight = "none";
  double cap = 4.0;
  std::optional<double> alpha;
  std::optional<double> lambda;
  int grid_alpha = 10;
  int grid_lambda = 10;
  int folds = 10;
  double trim = 0.1;
  double radius = 1e4;
  int max_iter = 5000;
  double tol = 1e-7;
  std::optional<std::uint64_t> seed;
  int replicates = 1;
  std::string scenario = "ex1";
  std::string error_law = "normal";
  std::vector<std::string> estimators;
  std::string baseline = "HA-Lasso";
  int n = 100;
  int p = 500;
  int n_test = 6;
  int splits = 100;
  int p1 = 0;
  int p2 = 0;
  bool standardize = false;
  bool fixed_tuning = false;
  std::string model;
  std::string out;
  std::string csv_out;
  unsigned threads = 0;

  SolverConfig solver() const {
    SolverConfig c;
    c.radius = radius;
    c.max_iter = max_iter;
    c.tol = tol;
    return c;
  }
  WeightSpec weight_spec() const { return {parse_weight_kind(weight), cap}; }
};

inline json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["response"] = c.response;
  j["loss"] = c.loss;
  j["penalty"] = c.penalty;
  j["weight"] = c.weight;
  j["cap"] = c.cap;
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
  j["grid_alpha"] = c.grid_alpha;
  j["grid_lambda"] = c.grid_lambda;
  j["folds"] = c.folds;
  j["trim"] = c.trim;
  j["radius"] = c.radius;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["replicates"] = c.replicates;
  j["scenario"] = c.scenario;
  j["error_law"] = c.error_law;
  j["estimators"] = c.estimators;
  j["baseline"] = c.baseline;
  j["n"] = c.n;
  j["p"] = c.p;
  j["n_test"] = c.n_test;
  j["splits"] = c.splits;
  j["p1"] = c.p1;
  j["p2"] = c.p2;
  j["standardize"] = c.standardize;
  j["fixed_tuning"] = c.fixed_tuning;
  j["model"] = c.model;
  j["out"] = c.out;
  j["csv_out"] = c.csv_out;
  j["threads"] = c.threads;
  return j;
}

/// Nonzero coefficients keyed by column name.
inline json sparse_coefficients(const Vector& beta, const std::vector<std::string>& names) {
  json j = json::object();
  for (Eigen::Index k = 0; k < beta.size(); ++k)
    if (beta(k) != 0.0) j[names[static_cast<std::size_t>(k)]] = beta(k);
  return j;
}

inline json to_json(const FitResult& f) {
  json j;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["kkt_residual"] = f.kkt_residual;
  j["alpha"] = f.alpha_used;
  j["lambda"] = f.lambda_used;
  j["final_objective"] = f.objective_trace.empty() ? json(nullptr) : json(f.objective_trace.back());
  j["step1_iterations"] = f.step1_iterations;
  return j;
}

inline json to_json(const CVResult& cv, const TuningGrid& grid) {
  json j;
  j["alphas"] = grid.alphas;
  j["lambdas"] = grid.lambdas;
  json rows = json::array();
  for (Eigen::Index i = 0; i < cv.scores.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < cv.scores.cols(); ++k) {
      const double s = cv.scores(i, k);
      row.push_back(std::isfinite(s) ? json(s) : json(nullptr));
    }
    rows.push_back(row);
  }
  j["scores"] = rows;
  j["best_alpha"] = cv.best_alpha;
  j["best_lambda"] = cv.best_lambda;
  j["fold_assignment"] = cv.fold_assignment;
  j["failed_fits"] = cv.failed_fits;
  return j;
}

inline json to_json(const SelectionMetrics& m) {
  return {{"l2_error", m.l2_error},
          {"l1_error", m.l1_error},
          {"model_size", m.model_size},
          {"fpr_percent", m.fpr_percent},
          {"fnr_percent", m.fnr_percent}};
}

inline json to_json(const StudySummary& s) {
  json j;
  j["master_seed"] = s.master_seed;
  j["replicates"] = s.replicates;
  json recs = json::array();
  for (const auto& r : s.records) {
    json jr;
    jr["scenario"] = r.scenario;
    jr["estimator"] = r.estimator;
    jr["n_ok"] = r.n_ok;
    jr["n_failed"] = r.n_failed;
    auto ms = [](const MetricSummary& m) { return json{{"mean", m.mean}, {"sd", m.sd}}; };
    jr["l2_error"] = ms(r.l2);
    jr["l1_error"] = ms(r.l1);
    jr["model_size"] = ms(r.model_size);
    jr["fpr_percent"] = ms(r.fpr);
    jr["fnr_percent"] = ms(r.fnr);
    json reps = json::array();
    for (const auto& o : r.outcomes) {
      json jo{{"replicate", o.replicate}, {"ok", o.ok}, {"alpha", o.alpha}, {"lambda", o.lambda},
              {"converged", o.converged}};
      if (o.ok)
        jo["metrics"] = to_json(o.metrics);
      else
        jo["error"] = o.error;
      reps.push_back(jo);
    }
    jr["replicate_results"] = reps;
    recs.push_back(jr);
  }
  j["records"] = recs;
  return j;
}

inline json to_json(const RPEReport& r) {
  json j;
  j["baseline"] = r.baseline;
  j["n_splits"] = r.n_splits;
  j["n_test"] = r.n_test;
  json ser = json::array();
  for (const auto& s : r.series) {
    auto opt_array = [](const std::vector<std::optional<double>>& v) {
      json a = json::array();
      for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
      return a;
    };
    ser.push_back({{"estimator", s.estimator}, {"rpe", opt_array(s.rpe)}, {"mspe", opt_array(s.mspe)},
                   {"missing", s.missing}});
  }
  j["series"] = ser;
  return j;
}

inline json report_envelope(const RunConfig& cfg) {
  json j;
  j["library"] = "pram";
  j["version"] = kVersion;
  j["config"] = to_json(cfg);
  return j;
}

inline void write_json_atomic(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace pram
