// Core types shared by every part of the library: dense vectors/matrices,
// the Dataset container and the error hierarchy.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pram {

inline constexpr const char* kVersion = "0.1.0";

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an iteration produces a non-finite objective.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a matrix that must be inverted is (numerically) singular.
class SingularMatrixError : public std::runtime_error {
public:
  SingularMatrixError(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

private:
  double condition_number_;
};

namespace detail {

inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace detail

/// Design matrix plus response. Rows are observations.
class Dataset {
public:
  Dataset() = default;

  Dataset(Matrix design, Vector response, std::vector<std::string> column_names = {})
      : design_(std::move(design)), response_(std::move(response)), names_(std::move(column_names)) {
    detail::require(design_.rows() >= 1 && design_.cols() >= 1, "dataset: need n >= 1 and p >= 1");
    detail::require(design_.rows() == response_.size(), "dataset: design and response row counts differ");
    detail::require(design_.allFinite() && response_.allFinite(), "dataset: non-finite entry");
    if (names_.empty()) {
      names_.reserve(static_cast<std::size_t>(design_.cols()));
      for (Eigen::Index j = 0; j < design_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
    }
    detail::require(names_.size() == static_cast<std::size_t>(design_.cols()),
                    "dataset: column name count does not match p");
  }

  const Matrix& design() const noexcept { return design_; }
  const Vector& response() const noexcept { return response_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  Eigen::Index n() const noexcept { return design_.rows(); }
  Eigen::Index p() const noexcept { return design_.cols(); }

  /// Copy of the given rows, preserving their order.
  Dataset subset_rows(const std::vector<Eigen::Index>& rows) const {
    Matrix x(static_cast<Eigen::Index>(rows.size()), p());
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = design_.row(rows[i]);
      y(static_cast<Eigen::Index>(i)) = response_(rows[i]);
    }
    return Dataset(std::move(x), std::move(y), names_);
  }

  /// Copy of the given columns, preserving their order.
  Dataset subset_columns(const std::vector<Eigen::Index>& cols) const {
    Matrix x(n(), static_cast<Eigen::Index>(cols.size()));
    std::vector<std::string> names;
    names.reserve(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      x.col(static_cast<Eigen::Index>(j)) = design_.col(cols[j]);
      names.push_back(names_[static_cast<std::size_t>(cols[j])]);
    }
    return Dataset(std::move(x), response_, std::move(names));
  }

private:
  Matrix design_;
  Vector response_;
  std::vector<std::string> names_;
};

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::Ref<const Vector>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace pram
