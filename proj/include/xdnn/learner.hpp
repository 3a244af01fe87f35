#ifndef XDNN_LEARNER_HPP
#define XDNN_LEARNER_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xdnn/density.hpp"
#include "xdnn/errors.hpp"
#include "xdnn/feature_space.hpp"

namespace xdnn {

enum class TieBreak { lowest_index };

struct TrainingConfig {
  double initial_radius_sq = xdnn::initial_radius_sq<double>();
  TieBreak tie_break = TieBreak::lowest_index;

  bool operator==(const TrainingConfig&) const = default;
};

inline void validate(const TrainingConfig& config) {
  if (!(config.initial_radius_sq > 0.0) || !std::isfinite(config.initial_radius_sq)) {
    throw StateError("initial_radius_sq must be positive and finite");
  }
}

/// Canonical, exact text form of a configuration (doubles in hex-float notation).
inline std::string fingerprint(const TrainingConfig& config) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", config.initial_radius_sq);
  return std::string("xdnn/1;initial_radius_sq=") + buf + ";tie_break=lowest_index";
}

/// Prototypes and running statistics of one class.
template <typename Scalar>
struct ClassModel {
  std::uint32_t class_id = 0;
  std::vector<DataCloud<Scalar>> clouds;
  GlobalStats<Scalar> stats;

  std::size_t prototype_count() const { return clouds.size(); }
  std::size_t total_support() const {
    std::size_t s = 0;
    for (const auto& c : clouds) s += c.support;
    return s;
  }

  bool operator==(const ClassModel&) const = default;
};

template <typename Scalar, typename Derived>
ClassModel<Scalar> init_class(const Eigen::MatrixBase<Derived>& x1, std::string source_ref,
                              std::uint32_t class_id, const TrainingConfig& config = {}) {
  ClassModel<Scalar> model;
  model.class_id = class_id;
  DataCloud<Scalar> cloud;
  cloud.prototype = x1;
  cloud.support = 1;
  cloud.radius_sq = static_cast<Scalar>(config.initial_radius_sq);
  cloud.source_ref = std::move(source_ref);
  cloud.class_id = class_id;
  model.clouds.push_back(std::move(cloud));
  update_stats(model.stats, x1);
  return model;
}

/// Index of the prototype closest to x in squared Euclidean distance (lowest index on ties).
template <typename Scalar, typename Derived>
std::size_t nearest_cloud(const ClassModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  if (model.clouds.empty()) throw StateError("nearest_cloud: class has no clouds");
  std::size_t best = 0;
  Scalar best_d2 = std::numeric_limits<Scalar>::infinity();
  for (std::size_t j = 0; j < model.clouds.size(); ++j) {
    const Scalar d2 = euclidean_sq(x, model.clouds[j].prototype);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

/// True when x is at least as dense as the densest prototype or at most as dense as the
/// sparsest one, under the class's current statistics (which must already include x).
template <typename Scalar, typename Derived>
bool should_add_cloud(const ClassModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  if (model.clouds.empty()) return true;
  const Scalar dx = density(model.stats, x);
  Scalar dmax = -std::numeric_limits<Scalar>::infinity();
  Scalar dmin = std::numeric_limits<Scalar>::infinity();
  for (const auto& c : model.clouds) {
    const Scalar dp = density(model.stats, c.prototype);
    dmax = std::max(dmax, dp);
    dmin = std::min(dmin, dp);
  }
  return dx >= dmax || dx <= dmin;
}

template <typename Scalar, typename Derived>
void add_cloud(ClassModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
               std::string source_ref, const TrainingConfig& config = {}) {
  if (!model.clouds.empty() && x.size() != model.clouds.front().prototype.size()) {
    throw DimensionError("add_cloud: dimension mismatch");
  }
  DataCloud<Scalar> cloud;
  cloud.prototype = x;
  cloud.support = 1;
  cloud.radius_sq = static_cast<Scalar>(config.initial_radius_sq);
  cloud.source_ref = std::move(source_ref);
  cloud.class_id = model.class_id;
  model.clouds.push_back(std::move(cloud));
}

/// Absorbs x into cloud j: the prototype moves to the running mean of its members and
/// the radius is relaxed towards 1 - |p|^2 (evaluated with the moved prototype, floored at 0).
template <typename Scalar, typename Derived>
void update_cloud(ClassModel<Scalar>& model, std::size_t j, const Eigen::MatrixBase<Derived>& x) {
  if (j >= model.clouds.size()) {
    throw StateError("update_cloud: cloud index " + std::to_string(j) + " out of range (" +
                     std::to_string(model.clouds.size()) + " clouds)");
  }
  auto& c = model.clouds[j];
  detail::require_same_size(c.prototype, x);
  const Scalar s = static_cast<Scalar>(c.support);
  c.prototype = (s / (s + Scalar(1))) * c.prototype + (Scalar(1) / (s + Scalar(1))) * x.reshaped();
  c.support += 1;
  c.radius_sq = std::max(Scalar(0), (c.radius_sq + (Scalar(1) - c.prototype.squaredNorm())) / Scalar(2));
}

/// One step of the single-pass learning procedure. Returns true if a new cloud was created.
template <typename Scalar, typename Derived>
bool learn_sample(ClassModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                  std::string source_ref, const TrainingConfig& config = {}) {
  if (model.clouds.empty()) {
    const auto id = model.class_id;
    model = init_class<Scalar>(x, std::move(source_ref), id, config);
    return true;
  }
  if (x.size() != model.stats.dimension()) {
    throw DimensionError("learn_sample: sample has dimension " + std::to_string(x.size()) +
                         ", class has " + std::to_string(model.stats.dimension()));
  }
  update_stats(model.stats, x);
  if (should_add_cloud(model, x)) {
    add_cloud(model, x, std::move(source_ref), config);
    return true;
  }
  update_cloud(model, nearest_cloud(model, x), x);
  return false;
}

/// A trained classifier: one ClassModel per class (ascending class_id), the normalization
/// fitted on the training features, and the configuration used.
template <typename Scalar>
struct BasicModel {
  Eigen::Index dimension = 0;
  std::vector<std::string> label_names;
  NormalizationParams<Scalar> normalization;
  TrainingConfig config;
  std::vector<ClassModel<Scalar>> classes;

  std::size_t cloud_count() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.clouds.size();
    return n;
  }

  const ClassModel<Scalar>* find_class(std::uint32_t class_id) const {
    auto it = std::lower_bound(classes.begin(), classes.end(), class_id,
                               [](const ClassModel<Scalar>& c, std::uint32_t id) { return c.class_id < id; });
    return it != classes.end() && it->class_id == class_id ? &*it : nullptr;
  }

  std::string label_name(std::uint32_t class_id) const {
    return class_id < label_names.size() ? label_names[class_id] : std::to_string(class_id);
  }

  /// Raw features -> model feature space.
  template <typename Derived>
  SampleMatrix<Scalar> prepare(const Eigen::MatrixBase<Derived>& raw) const {
    return apply_normalization(raw, normalization);
  }

  bool operator==(const BasicModel&) const = default;
};

using Model = BasicModel<double>;

/// Instrumentation for train(): called once per sample, in stream order.
struct TrainHooks {
  std::function<void(std::size_t sample_index, std::uint32_t class_id, bool created_cloud)> on_sample;
};

/// Trains one ClassModel per distinct label over already normalized rows, each class
/// seeing its own samples in stream order. Classes are independent of one another.
template <typename Derived, typename Scalar = typename Derived::Scalar>
BasicModel<Scalar> train(const Eigen::MatrixBase<Derived>& x, std::span<const std::uint32_t> labels,
                         std::span<const std::string> refs, const TrainingConfig& config = {},
                         const TrainHooks* hooks = nullptr) {
  validate(config);
  if (x.rows() == 0) throw StateError("train: empty dataset");
  if (labels.size() != static_cast<std::size_t>(x.rows()) ||
      (!refs.empty() && refs.size() != labels.size())) {
    throw DimensionError("train: features, labels and refs disagree in length");
  }
  std::map<std::uint32_t, ClassModel<Scalar>> by_class;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto label = labels[static_cast<std::size_t>(i)];
    auto [it, inserted] = by_class.try_emplace(label);
    if (inserted) it->second.class_id = label;
    const bool created = learn_sample(it->second, x.row(i).transpose(),
                                      refs.empty() ? std::string() : refs[static_cast<std::size_t>(i)], config);
    if (hooks && hooks->on_sample) hooks->on_sample(static_cast<std::size_t>(i), label, created);
  }
  BasicModel<Scalar> model;
  model.dimension = x.cols();
  model.config = config;
  model.classes.reserve(by_class.size());
  for (auto& [id, cm] : by_class) model.classes.push_back(std::move(cm));
  return model;
}

}  // namespace xdnn

#endif  // XDNN_LEARNER_HPP
