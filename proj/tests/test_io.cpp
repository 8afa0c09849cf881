#include "oracles.hpp"
#include "pram/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

namespace {

namespace fs = std::filesystem;
using pram::Dataset;
using pram::Matrix;
using pram::Vector;

class TempDir : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pram_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  fs::path dir_;
};

using LoadCsv = TempDir;

TEST_F(LoadCsv, ParsesResponseAndCovariates) {
  const auto p = write("a.csv", "y,x1,x2\n1,2,3\n4,5,6\n7,8,9\n");
  const Dataset d = pram::load_csv(p, "y");
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.p(), 2);
  EXPECT_EQ(d.response()(2), 7.0);
  EXPECT_EQ(d.design()(1, 1), 6.0);
  EXPECT_EQ(d.column_names(), (std::vector<std::string>{"x1", "x2"}));
  const Dataset mid = pram::load_csv(p, "x1");
  EXPECT_EQ(mid.response()(0), 2.0);
  EXPECT_EQ(mid.column_names(), (std::vector<std::string>{"y", "x2"}));
}

TEST_F(LoadCsv, ReportsRowAndColumnOfBadCell) {
  const auto p = write("b.csv", "y,x1,x2\n1,2,3\n4,NA,6\n");
  try {
    pram::load_csv(p, "y");
    FAIL() << "expected CsvError";
  } catch (const pram::CsvError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), "x1");
    EXPECT_NE(std::string(e.what()).find("x1"), std::string::npos);
  }
}

TEST_F(LoadCsv, Errors) {
  const auto p = write("c.csv", "y,x1\n1,2\n3,4\n");
  try {
    pram::load_csv(p, "z");
    FAIL();
  } catch (const pram::CsvError& e) {
    EXPECT_EQ(e.column(), "z");
  }
  EXPECT_THROW(pram::load_csv(write("d.csv", "y,x1\n1,2\n"), "y"), pram::CsvError);
  EXPECT_THROW(pram::load_csv(write("e.csv", "y,x1\n1,2,3\n3,4\n"), "y"), pram::CsvError);
  EXPECT_THROW(pram::load_csv(dir_ / "missing.csv", "y"), std::runtime_error);
}

using SaveCsv = TempDir;

TEST_F(SaveCsv, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  const Matrix x = pram::oracle::gaussian_matrix(rng, 25, 7) * 1e3;
  const Vector y = pram::oracle::gaussian_vector(rng, 25, 1e-4);
  const Dataset d(x, y);
  const auto p = dir_ / "round.csv";
  pram::save_csv(d, p);
  const Dataset back = pram::load_csv(p, "y");
  EXPECT_EQ(back.design(), d.design());
  EXPECT_EQ(back.response(), d.response());
  EXPECT_EQ(back.column_names(), d.column_names());
  EXPECT_FALSE(fs::exists(dir_ / "round.csv.tmp"));
}

TEST_F(SaveCsv, JsonWriteIsAtomic) {
  const auto p = dir_ / "r.json";
  pram::write_json_atomic(p, pram::json{{"a", 1}});
  pram::write_json_atomic(p, pram::json{{"a", 2}});
  std::ifstream in(p);
  const auto j = pram::json::parse(in);
  EXPECT_EQ(j["a"], 2);
  for (const auto& e : fs::directory_iterator(dir_)) EXPECT_EQ(e.path().filename(), "r.json");
}

TEST(Prescreen, IdentityAndExactColumn) {
  std::mt19937_64 rng(2);
  const Matrix x = pram::oracle::gaussian_matrix(rng, 30, 6);
  const Dataset d(x, pram::oracle::gaussian_vector(rng, 30));
  const auto all = pram::prescreen(d, 6, 6);
  EXPECT_EQ(all.data.design(), d.design());
  EXPECT_EQ(all.kept.size(), 6u);

  Matrix xe = x;
  xe.col(3) = d.response() * 5.0;  // also the largest variance
  const Dataset de(xe, d.response());
  for (int p2 = 1; p2 <= 6; ++p2) {
    const auto r = pram::prescreen(de, 6, p2);
    EXPECT_NE(std::find(r.kept.begin(), r.kept.end(), 3), r.kept.end());
  }
}

TEST(Prescreen, HandComputedFiveColumns) {
  Matrix x(5, 5);
  x.col(0) << 0.1, 0.2, 0.3, 0.4, 0.5;      // var 0.025, corr 1
  x.col(1) << 50, 10, 40, 20, 30;           // var 250, corr -0.3
  x.col(2) << 3, 6, 9, 12, 18;              // var 33.3, corr 0.986
  x.col(3) << 2, 2, 2, 2, 3;                // var 0.2, corr 0.707
  x.col(4) << 15, 5, 10, 25, 20;            // var 62.5, corr 0.6
  Vector y(5);
  y << 1, 2, 3, 4, 5;
  const auto r = pram::prescreen(Dataset(x, y), 3, 2);
  EXPECT_EQ(r.kept, (std::vector<Eigen::Index>{2, 4}));
  EXPECT_EQ(r.data.column_names(), (std::vector<std::string>{"x3", "x5"}));
  EXPECT_THROW(pram::prescreen(Dataset(x, Vector::Ones(5)), 3, 2), std::invalid_argument);
  EXPECT_THROW(pram::prescreen(Dataset(x, y), 2, 3), std::invalid_argument);
}

TEST(Predict, Examples) {
  const Matrix x = Matrix::Identity(4, 4);
  Vector b(4);
  b << 1, -2, 0, 3;
  EXPECT_EQ(pram::predict(b, x), b);
  EXPECT_TRUE(pram::predict(Vector::Zero(4), x).isZero(0.0));
  Matrix row(1, 2);
  row << 2, 3;
  Vector b2(2);
  b2 << 1, -1;
  EXPECT_EQ(pram::predict(b2, row)(0), -1.0);
  EXPECT_THROW(pram::predict(b, row), std::invalid_argument);
}

TEST(Standardizer, BackTransformPreservesPredictions) {
  std::mt19937_64 rng(3);
  Matrix x = pram::oracle::gaussian_matrix(rng, 20, 3);
  x.col(0) = x.col(0) * 4.0 + Vector::Constant(20, 7.0);
  const Dataset d(x, pram::oracle::gaussian_vector(rng, 20) + Vector::Constant(20, 2.0));
  const auto s = pram::Standardizer::fit(d);
  const Dataset z = s.apply(d);
  EXPECT_NEAR(z.response().mean(), 0.0, 1e-14);
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(z.design().col(j).squaredNorm() / 19.0, 1.0, 1e-12);
  const Vector bz = pram::oracle::gaussian_vector(rng, 3);
  const Vector b = s.coefficients(bz);
  const double c = s.intercept(b);
  const Vector lhs = (x * b).array() + c;
  const Vector rhs = (z.design() * bz).array() + s.y_mean;
  EXPECT_LT((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-12);
}

Dataset rpe_data() {
  std::mt19937_64 rng(4);
  const Matrix x = pram::oracle::gaussian_matrix(rng, 30, 12);
  return Dataset(x, 2.0 * x.col(0) - x.col(5) + pram::oracle::gaussian_vector(rng, 30));
}

TEST(RpeEval, BaselineAgainstItselfAndDeterminism) {
  const Dataset d = rpe_data();
  pram::RpeOptions opt;
  opt.n_splits = 4;
  opt.n_test = 6;
  opt.grid_alpha = 2;
  opt.grid_lambda = 3;
  opt.folds = 3;
  opt.seed = 5;
  const auto base = pram::parse_estimator("HA-Lasso");
  const auto rep = pram::rpe_eval(d, {base, pram::parse_estimator("HA-MCP")}, base, opt);
  ASSERT_EQ(rep.series.size(), 2u);
  EXPECT_EQ(rep.series[0].estimator, "HA-Lasso");
  for (const auto& r : rep.series[0].rpe) {
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(*r, 1.0);
  }
  EXPECT_EQ(rep.series[1].rpe.size(), 4u);
  const auto again = pram::rpe_eval(d, {base, pram::parse_estimator("HA-MCP")}, base, opt);
  EXPECT_EQ(pram::to_json(rep).dump(), pram::to_json(again).dump());

  opt.fixed_tuning = true;
  const auto fixed = pram::rpe_eval(d, {pram::parse_estimator("TA-MCP")}, base, opt);
  EXPECT_EQ(fixed.series.size(), 2u);
  EXPECT_EQ(fixed.series[1].missing, 0);
}

TEST(RpeEval, DefaultProtocolShape) {
  const Dataset d = rpe_data();
  pram::RpeOptions opt;
  opt.fixed_tuning = true;
  opt.grid_alpha = 2;
  opt.grid_lambda = 2;
  opt.folds = 3;
  const auto rep = pram::rpe_eval(d, {pram::parse_estimator("HA-MCP")}, pram::parse_estimator("HA-Lasso"), opt);
  EXPECT_EQ(rep.n_splits, 100);
  EXPECT_EQ(rep.n_test, 6);
  for (const auto& s : rep.series) EXPECT_EQ(s.rpe.size(), 100u);
}

TEST(RunConfig, JsonCarriesResolvedConfig) {
  pram::RunConfig c;
  c.command = "fit";
  c.alpha = 2.5;
  const auto env = pram::report_envelope(c);
  EXPECT_EQ(env["library"], "pram");
  const auto& cfg = env["config"];
  for (const char* key : {"command", "input", "response", "loss", "penalty", "weight", "cap", "alpha", "lambda",
                          "grid_alpha", "grid_lambda", "folds", "trim", "radius", "max_iter", "tol", "seed",
                          "replicates", "scenario", "error_law"})
    EXPECT_TRUE(cfg.contains(key)) << key;
  EXPECT_EQ(cfg["alpha"], 2.5);
  EXPECT_TRUE(cfg["lambda"].is_null());
}

}  // namespace
