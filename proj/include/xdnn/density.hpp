#ifndef XDNN_DENSITY_HPP
#define XDNN_DENSITY_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xdnn/errors.hpp"
#include "xdnn/feature_space.hpp"

namespace xdnn {

/// Floor for variances and kernel scales.
inline constexpr double kScaleEpsilon = 1e-12;

/// Running per-class statistics: mean vector, mean of squared norms, sample count.
template <typename Scalar>
struct GlobalStats {
  Vector<Scalar> mean;
  Scalar mean_sq_norm = Scalar(0);
  std::size_t count = 0;

  bool empty() const { return count == 0; }
  Eigen::Index dimension() const { return mean.size(); }

  /// mean_sq_norm - |mean|^2, clamped at zero.
  Scalar variance() const { return std::max(Scalar(0), mean_sq_norm - mean.squaredNorm()); }

  bool operator==(const GlobalStats& o) const {
    return count == o.count && mean_sq_norm == o.mean_sq_norm && identical(mean, o.mean);
  }
};

/// Folds one sample into the running statistics:
///   mean_i = (i-1)/i * mean_{i-1} + 1/i * x
///   sq_i   = (i-1)/i * sq_{i-1}   + 1/i * |x|^2,   sq_1 = |x_1|^2
template <typename Scalar, typename Derived>
void update_stats(GlobalStats<Scalar>& stats, const Eigen::MatrixBase<Derived>& x) {
  if (stats.empty()) {
    stats.mean = x.reshaped();
    stats.mean_sq_norm = x.squaredNorm();
    stats.count = 1;
    return;
  }
  if (x.size() != stats.mean.size()) {
    throw DimensionError("update_stats: sample has dimension " + std::to_string(x.size()) +
                         ", stats have " + std::to_string(stats.mean.size()));
  }
  stats.count += 1;
  const Scalar i = static_cast<Scalar>(stats.count);
  const Scalar keep = (i - Scalar(1)) / i;
  const Scalar take = Scalar(1) / i;
  stats.mean = keep * stats.mean + take * x.reshaped();
  stats.mean_sq_norm = keep * stats.mean_sq_norm + take * x.squaredNorm();
}

/// Cauchy data density 1 / (1 + |x - mean|^2 / variance).
///
/// When the variance is below kScaleEpsilon the density degenerates to an indicator:
/// 1 at the mean (within epsilon), 0 elsewhere.
template <typename Scalar, typename Derived>
Scalar density(const GlobalStats<Scalar>& stats, const Eigen::MatrixBase<Derived>& x) {
  if (stats.empty()) throw StateError("density: statistics are empty");
  const Scalar d2 = euclidean_sq(x, stats.mean);
  const Scalar var = stats.variance();
  const auto eps = static_cast<Scalar>(kScaleEpsilon);
  if (var <= eps) return d2 <= eps ? Scalar(1) : Scalar(0);
  return Scalar(1) / (Scalar(1) + d2 / var);
}

/// A prototype with its area of influence. `support` counts absorbed samples.
template <typename Scalar>
struct DataCloud {
  Vector<Scalar> prototype;
  std::size_t support = 1;
  Scalar radius_sq = initial_radius_sq<Scalar>();
  std::string source_ref;
  std::uint32_t class_id = 0;

  bool operator==(const DataCloud& o) const {
    return support == o.support && radius_sq == o.radius_sq && source_ref == o.source_ref &&
           class_id == o.class_id && identical(prototype, o.prototype);
  }
};

/// Support-weighted mixture of Cauchy kernels (one per cloud, scale radius_sq)
/// evaluated on each grid row and normalized so the weights sum to one.
template <typename Scalar, typename Derived>
std::vector<Scalar> typicality(std::span<const DataCloud<Scalar>> clouds,
                               const Eigen::MatrixBase<Derived>& grid) {
  if (clouds.empty()) throw StateError("typicality: no clouds");
  if (grid.rows() == 0) throw StateError("typicality: empty grid");
  const auto eps = static_cast<Scalar>(kScaleEpsilon);
  std::vector<Scalar> weights(static_cast<std::size_t>(grid.rows()), Scalar(0));
  Scalar total = Scalar(0);
  for (Eigen::Index k = 0; k < grid.rows(); ++k) {
    Scalar w = Scalar(0);
    for (const auto& c : clouds) {
      const Scalar scale = std::max(c.radius_sq, eps);
      const Scalar d2 = euclidean_sq(grid.row(k).transpose(), c.prototype);
      w += static_cast<Scalar>(c.support) / (Scalar(1) + d2 / scale);
    }
    weights[static_cast<std::size_t>(k)] = w;
    total += w;
  }
  for (auto& w : weights) w /= total;
  return weights;
}

}  // namespace xdnn

#endif  // XDNN_DENSITY_HPP
