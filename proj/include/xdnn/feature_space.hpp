#ifndef XDNN_FEATURE_SPACE_HPP
#define XDNN_FEATURE_SPACE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "xdnn/errors.hpp"

namespace xdnn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Row-major sample matrix: one feature vector per row.
template <typename Scalar>
using SampleMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorXd = Vector<double>;
using SampleMatrixXd = SampleMatrix<double>;

/// Shape-checked equality (Eigen's operator== requires equal shapes).
template <typename A, typename B>
bool identical(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.derived().array() == b.derived().array()).all();
}

/// Squared chord length between two unit vectors 30 degrees apart: 2 - 2cos(30deg).
template <typename Scalar = double>
inline Scalar initial_radius_sq() {
  return Scalar(2) - Scalar(2) * std::cos(std::numbers::pi_v<Scalar> / Scalar(6));
}

/// Per-column parameters of the standardize + min-max pipeline, fitted on training data.
///
/// `mean`/`std` map raw features to standardized ones; `min`/`max` are taken over the
/// standardized training matrix and map it onto [0, 1]. An empty parameter set
/// (dimension 0) stands for the identity transform.
template <typename Scalar>
struct NormalizationParams {
  Vector<Scalar> mean;
  Vector<Scalar> std;
  Vector<Scalar> min;
  Vector<Scalar> max;

  Eigen::Index dimension() const { return mean.size(); }
  bool empty() const { return mean.size() == 0; }

  bool operator==(const NormalizationParams& o) const {
    return identical(mean, o.mean) && identical(std, o.std) && identical(min, o.min) && identical(max, o.max);
  }
};

namespace detail {

template <typename A, typename B>
void require_same_size(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

}  // namespace detail

/// Applies stored mean/std to every row. Zero-std columns map to 0.
template <typename Derived, typename Scalar = typename Derived::Scalar>
SampleMatrix<Scalar> apply_standardize(const Eigen::MatrixBase<Derived>& x,
                                       const NormalizationParams<Scalar>& params) {
  if (x.cols() != params.mean.size()) {
    throw DimensionError("standardize: matrix has " + std::to_string(x.cols()) +
                         " columns, parameters have " + std::to_string(params.mean.size()));
  }
  SampleMatrix<Scalar> out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Scalar sd = params.std(j);
    if (sd > Scalar(0)) {
      out.col(j) = (x.col(j).array() - params.mean(j)) / sd;
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

/// Fits per-column mean and sample standard deviation (divisor N-1) and returns the
/// standardized matrix together with those parameters. min/max are left empty.
template <typename Derived, typename Scalar = typename Derived::Scalar>
std::pair<SampleMatrix<Scalar>, NormalizationParams<Scalar>> standardize(
    const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() < 2) {
    throw DimensionError("standardize needs at least 2 rows, got " + std::to_string(x.rows()));
  }
  if (x.cols() < 1) {
    throw DimensionError("standardize needs at least 1 column");
  }
  NormalizationParams<Scalar> params;
  const auto n = static_cast<Scalar>(x.rows());
  params.mean = x.colwise().mean().transpose();
  params.std.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Scalar ss = (x.col(j).array() - params.mean(j)).square().sum();
    params.std(j) = std::sqrt(ss / (n - Scalar(1)));
  }
  auto z = apply_standardize(x, params);
  return {std::move(z), std::move(params)};
}

/// Maps each column onto [0, 1] using params.min / params.max, clipping anything
/// outside the fitted range. Columns with min == max map to 0.5.
template <typename Derived, typename Scalar = typename Derived::Scalar>
SampleMatrix<Scalar> minmax_normalize(const Eigen::MatrixBase<Derived>& z,
                                      const NormalizationParams<Scalar>& params) {
  if (z.cols() != params.min.size() || z.cols() != params.max.size()) {
    throw DimensionError("minmax_normalize: matrix has " + std::to_string(z.cols()) +
                         " columns, parameters have " + std::to_string(params.min.size()));
  }
  SampleMatrix<Scalar> out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const Scalar lo = params.min(j);
    const Scalar range = params.max(j) - lo;
    if (range > Scalar(0)) {
      out.col(j) = ((z.col(j).array() - lo) / range).cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
    } else {
      out.col(j).setConstant(Scalar(0.5));
    }
  }
  return out;
}

/// Fits the full standardize + min-max pipeline on a training matrix.
template <typename Derived, typename Scalar = typename Derived::Scalar>
NormalizationParams<Scalar> fit_normalization(const Eigen::MatrixBase<Derived>& x) {
  auto [z, params] = standardize(x);
  params.min = z.colwise().minCoeff().transpose();
  params.max = z.colwise().maxCoeff().transpose();
  return params;
}

/// Transforms raw rows with fitted parameters. Identity when params are empty.
template <typename Derived, typename Scalar = typename Derived::Scalar>
SampleMatrix<Scalar> apply_normalization(const Eigen::MatrixBase<Derived>& x,
                                         const NormalizationParams<Scalar>& params) {
  if (params.empty()) return x;
  return minmax_normalize(apply_standardize(x, params), params);
}

template <typename A, typename B>
typename A::Scalar euclidean_sq(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  detail::require_same_size(x, y);
  return (x.reshaped() - y.reshaped()).squaredNorm();
}

/// Chord distance between the directions of x and y: sqrt(2 - 2cos(angle)), in [0, 2].
template <typename A, typename B>
typename A::Scalar angular_dissimilarity(const Eigen::MatrixBase<A>& x,
                                         const Eigen::MatrixBase<B>& y) {
  using Scalar = typename A::Scalar;
  detail::require_same_size(x, y);
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (!(nx > Scalar(0)) || !(ny > Scalar(0))) {
    throw DegenerateInputError("angular_dissimilarity: zero vector");
  }
  return (x / nx - y / ny).norm();
}

}  // namespace xdnn

#endif  // XDNN_FEATURE_SPACE_HPP
