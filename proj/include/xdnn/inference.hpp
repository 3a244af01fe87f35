#ifndef XDNN_INFERENCE_HPP
#define XDNN_INFERENCE_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xdnn/density.hpp"
#include "xdnn/errors.hpp"
#include "xdnn/learner.hpp"

namespace xdnn {

/// Kernel scale used by similarity(): 1 for every cloud, or each cloud's own radius_sq.
enum class ScaleMode { uniform, per_cloud };

struct ClassScore {
  std::uint32_t class_id = 0;
  double lambda = 0.0;
  std::size_t best_cloud = 0;  // index within the class

  bool operator==(const ClassScore&) const = default;
};

struct Prediction {
  std::uint32_t label = 0;
  std::vector<ClassScore> per_class_scores;
  std::size_t winning_cloud = 0;  // index within the winning class
  double winning_similarity = 0.0;
  std::string winning_ref;

  bool operator==(const Prediction&) const = default;
};

template <typename Scalar, typename Derived>
Scalar similarity(const DataCloud<Scalar>& cloud, const Eigen::MatrixBase<Derived>& x,
                  ScaleMode mode = ScaleMode::uniform) {
  const Scalar d2 = euclidean_sq(x, cloud.prototype);
  const Scalar scale = mode == ScaleMode::uniform
                           ? Scalar(1)
                           : std::max(cloud.radius_sq, static_cast<Scalar>(kScaleEpsilon));
  return Scalar(1) / (Scalar(1) + d2 / scale);
}

/// Winner-takes-all within one class.
template <typename Scalar, typename Derived>
ClassScore local_decision(const ClassModel<Scalar>& cm, const Eigen::MatrixBase<Derived>& x,
                          ScaleMode mode = ScaleMode::uniform) {
  if (cm.clouds.empty()) throw StateError("local_decision: class " + std::to_string(cm.class_id) + " is empty");
  ClassScore score{cm.class_id, -1.0, 0};
  for (std::size_t j = 0; j < cm.clouds.size(); ++j) {
    const double s = static_cast<double>(similarity(cm.clouds[j], x, mode));
    if (s > score.lambda) {
      score.lambda = s;
      score.best_cloud = j;
    }
  }
  return score;
}

/// Winner-takes-all across classes; ties resolve to the lowest class_id.
inline Prediction global_decision(std::vector<ClassScore> per_class) {
  if (per_class.empty()) throw StateError("global_decision: no class scores");
  std::sort(per_class.begin(), per_class.end(),
            [](const ClassScore& a, const ClassScore& b) { return a.class_id < b.class_id; });
  std::size_t win = 0;
  for (std::size_t c = 1; c < per_class.size(); ++c) {
    if (per_class[c].lambda > per_class[win].lambda) win = c;
  }
  Prediction p;
  p.label = per_class[win].class_id;
  p.winning_cloud = per_class[win].best_cloud;
  p.winning_similarity = per_class[win].lambda;
  p.per_class_scores = std::move(per_class);
  return p;
}

/// Classifies one normalized sample.
template <typename Scalar, typename Derived>
Prediction predict(const BasicModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                   ScaleMode mode = ScaleMode::uniform) {
  if (model.classes.empty()) throw StateError("predict: model has no classes");
  if (x.size() != model.dimension) {
    throw DimensionError("predict: sample has dimension " + std::to_string(x.size()) + ", model has " +
                         std::to_string(model.dimension));
  }
  std::vector<ClassScore> scores;
  scores.reserve(model.classes.size());
  for (const auto& cm : model.classes) scores.push_back(local_decision(cm, x, mode));
  auto p = global_decision(std::move(scores));
  p.winning_ref = model.find_class(p.label)->clouds[p.winning_cloud].source_ref;
  return p;
}

/// Classifies every row of xs (already normalized). Rows are split into contiguous
/// chunks across `workers` threads; output order matches input order.
template <typename Scalar, typename Derived>
std::vector<Prediction> predict_batch(const BasicModel<Scalar>& model, const Eigen::MatrixBase<Derived>& xs,
                                      ScaleMode mode = ScaleMode::uniform, unsigned workers = 1) {
  const auto n = static_cast<std::size_t>(xs.rows());
  std::vector<Prediction> out(n);
  if (n == 0) return out;
  if (xs.cols() != model.dimension) {
    throw DimensionError("predict_batch: rows have dimension " + std::to_string(xs.cols()) +
                         ", model has " + std::to_string(model.dimension));
  }
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = predict(model, xs.row(static_cast<Eigen::Index>(i)).transpose(), mode);
    }
  };
  if (workers == 1) {
    run(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    pool.emplace_back(run, begin, std::min(n, begin + chunk));
  }
  pool.clear();  // join before handing out the results
  return out;
}

}  // namespace xdnn

#endif  // XDNN_INFERENCE_HPP
