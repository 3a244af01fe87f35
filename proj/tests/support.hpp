// Shared fixtures and independent oracles for the unit and acceptance suites.
#ifndef XDNN_TESTS_SUPPORT_HPP
#define XDNN_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xdnn/dataset.hpp"
#include "xdnn/learner.hpp"

namespace xdnn::testing {

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

inline SampleMatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return SampleMatrixXd::NullaryExpr(rows, cols, [&] { return u(rng); });
}

/// Plain-loop squared distance, independent of Eigen's reductions.
inline double summed_sq(const VectorXd& a, const VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double d = a(j) - b(j);
    s += d * d;
  }
  return s;
}

/// Model with random clouds spread over several classes; stats consistent with supports.
inline Model random_model(std::mt19937_64& rng, std::size_t classes, std::size_t clouds_per_class, Eigen::Index dims,
                          double radius_lo = 0.0, double radius_hi = 0.1) {
  std::uniform_real_distribution<double> u(radius_lo, radius_hi);
  std::uniform_int_distribution<std::size_t> support(1, 5);
  Model m;
  m.dimension = dims;
  for (std::uint32_t c = 0; c < classes; ++c) {
    ClassModel<double> cm;
    cm.class_id = c;
    cm.stats.mean = VectorXd::Zero(dims);
    for (std::size_t j = 0; j < clouds_per_class; ++j) {
      DataCloud<double> cloud;
      cloud.class_id = c;
      cloud.prototype = random_vector(rng, dims);
      cloud.radius_sq = u(rng);
      cloud.support = support(rng);
      cloud.source_ref = "class" + std::to_string(c) + "/img" + std::to_string(j) + ".png";
      cm.stats.mean += cloud.prototype;
      cm.stats.mean_sq_norm += cloud.prototype.squaredNorm();
      cm.clouds.push_back(std::move(cloud));
    }
    cm.stats.mean /= static_cast<double>(clouds_per_class);
    cm.stats.mean_sq_norm /= static_cast<double>(clouds_per_class);
    cm.stats.count = cm.total_support();
    m.classes.push_back(std::move(cm));
  }
  for (std::uint32_t c = 0; c < classes; ++c) m.label_names.push_back("label" + std::to_string(c));
  return m;
}

/// Hand-built 2-D model behind the golden rule file.
///   class 0: A(0.1,0.1) r=.2, B(0.3,0.1) r=.2, C(0.9,0.9) r=.1   -> A-B overlap: {A,B}, {C}
///   class 1: D(0.1,0.35) r=.1 (touches A, other class), E(0.6,0.6) r=.05 -> {D}, {E}
inline Model golden_model() {
  Model m;
  m.dimension = 2;
  m.label_names = {"road", "snow"};
  auto cloud = [](std::uint32_t cls, double x, double y, double r2, std::size_t support, std::string ref) {
    DataCloud<double> c;
    c.class_id = cls;
    c.prototype = VectorXd(2);
    c.prototype << x, y;
    c.radius_sq = r2;
    c.support = support;
    c.source_ref = std::move(ref);
    return c;
  };
  ClassModel<double> c0;
  c0.class_id = 0;
  c0.clouds = {cloud(0, 0.1, 0.1, 0.04, 3, "roads/0001.jpg"), cloud(0, 0.3, 0.1, 0.04, 2, "roads/0007.jpg"),
               cloud(0, 0.9, 0.9, 0.01, 1, "roads/0042 (night).jpg")};
  ClassModel<double> c1;
  c1.class_id = 1;
  c1.clouds = {cloud(1, 0.1, 0.35, 0.01, 4, "snow/0003.jpg"), cloud(1, 0.6, 0.6, 0.0025, 1, "snow/back\\slash.jpg")};
  for (auto* cm : {&c0, &c1}) {
    cm->stats.mean = VectorXd::Zero(2);
    double sq = 0.0;
    for (const auto& c : cm->clouds) {
      cm->stats.mean += static_cast<double>(c.support) * c.prototype;
      sq += static_cast<double>(c.support) * c.prototype.squaredNorm();
    }
    cm->stats.count = cm->total_support();
    cm->stats.mean /= static_cast<double>(cm->stats.count);
    cm->stats.mean_sq_norm = sq / static_cast<double>(cm->stats.count);
  }
  m.classes = {c0, c1};
  return m;
}

/// Three 2-D Gaussian blobs (sigma 1) with centres 10 apart, classes interleaved.
inline Dataset make_blobs(std::uint64_t seed, std::size_t samples = 300) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double centres[3][2] = {{0.0, 0.0}, {10.0, 0.0}, {5.0, 8.660254037844386}};
  Dataset d;
  d.label_names = {"blob0", "blob1", "blob2"};
  d.features.resize(static_cast<Eigen::Index>(samples), 2);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto c = static_cast<std::uint32_t>(i % 3);
    d.features(static_cast<Eigen::Index>(i), 0) = centres[c][0] + noise(rng);
    d.features(static_cast<Eigen::Index>(i), 1) = centres[c][1] + noise(rng);
    d.labels.push_back(c);
    d.refs.push_back("blob" + std::to_string(c) + "/" + std::to_string(i));
  }
  return d;
}

/// Scalar transliteration of the single-pass learning procedure for 1-D samples.
/// Deliberately written without Eigen or any library code.
struct ScriptedCloud {
  double prototype;
  std::size_t support;
  double radius_sq;
};

struct ScriptedState {
  std::vector<ScriptedCloud> clouds;
  double mu = 0.0;
  double sigma_sum = 0.0;  // running mean of x^2
  std::size_t i = 0;
};

inline double scripted_density(const ScriptedState& s, double x) {
  double var = s.sigma_sum - s.mu * s.mu;
  if (var < 0.0) var = 0.0;
  const double d2 = (x - s.mu) * (x - s.mu);
  if (var <= 1e-12) return d2 <= 1e-12 ? 1.0 : 0.0;
  return 1.0 / (1.0 + d2 / var);
}

inline void scripted_step(ScriptedState& s, double x, double r0) {
  if (s.i == 0) {
    // first sample seeds the class
    s.clouds.push_back({x, 1, r0});
    s.mu = x;
    s.sigma_sum = x * x;
    s.i = 1;
    return;
  }
  s.i += 1;
  const double i = static_cast<double>(s.i);
  s.mu = ((i - 1.0) / i) * s.mu + (1.0 / i) * x;
  s.sigma_sum = ((i - 1.0) / i) * s.sigma_sum + (1.0 / i) * (x * x);
  const double dx = scripted_density(s, x);
  double dmax = -1.0, dmin = 2.0;
  for (const auto& c : s.clouds) {
    const double dp = scripted_density(s, c.prototype);
    if (dp > dmax) dmax = dp;
    if (dp < dmin) dmin = dp;
  }
  if (dx >= dmax || dx <= dmin) {
    s.clouds.push_back({x, 1, r0});
    return;
  }
  // nearest prototype, first one wins ties
  std::size_t best = 0;
  for (std::size_t j = 1; j < s.clouds.size(); ++j) {
    const double dj = (x - s.clouds[j].prototype) * (x - s.clouds[j].prototype);
    const double db = (x - s.clouds[best].prototype) * (x - s.clouds[best].prototype);
    if (dj < db) best = j;
  }
  // running-mean prototype update, then radius from the moved prototype
  auto& c = s.clouds[best];
  const double S = static_cast<double>(c.support);
  c.prototype = (S / (S + 1.0)) * c.prototype + (1.0 / (S + 1.0)) * x;
  c.support += 1;
  double r2 = (c.radius_sq + (1.0 - c.prototype * c.prototype)) / 2.0;
  c.radius_sq = r2 < 0.0 ? 0.0 : r2;
}

/// Deterministic 1-D stream in [0, 1] mixing a few modes, for the scripted-oracle comparison.
inline std::vector<double> scripted_stream(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_int_distribution<int> mode(0, 2);
  const double modes[3] = {0.2, 0.5, 0.85};
  std::vector<double> out;
  for (std::size_t k = 0; k < n; ++k) {
    double v = modes[mode(rng)] + noise(rng);
    out.push_back(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
  }
  return out;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace xdnn::testing

#endif  // XDNN_TESTS_SUPPORT_HPP
