// Throughput of predict_batch against worker count on a synthetic model.
// Usage: xdnn_bench [dims=256] [prototypes_per_class=200] [classes=5] [queries=20000]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>
#include <thread>

#include "xdnn/inference.hpp"

int main(int argc, char** argv) {
  auto arg = [&](int i, long def) { return argc > i ? std::atol(argv[i]) : def; };
  const auto dims = arg(1, 256);
  const auto per_class = static_cast<std::size_t>(arg(2, 200));
  const auto classes = static_cast<std::uint32_t>(arg(3, 5));
  const auto queries = arg(4, 20000);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  xdnn::Model model;
  model.dimension = dims;
  for (std::uint32_t c = 0; c < classes; ++c) {
    xdnn::ClassModel<double> cm;
    cm.class_id = c;
    for (std::size_t j = 0; j < per_class; ++j) {
      xdnn::DataCloud<double> cloud;
      cloud.prototype = xdnn::VectorXd::NullaryExpr(dims, [&] { return u(rng); });
      cloud.class_id = c;
      cm.clouds.push_back(std::move(cloud));
    }
    model.classes.push_back(std::move(cm));
  }
  const xdnn::SampleMatrixXd xs = xdnn::SampleMatrixXd::NullaryExpr(queries, dims, [&] { return u(rng); });

  const unsigned max_workers = std::max(1u, std::thread::hardware_concurrency());
  double base = 0.0;
  for (unsigned w = 1; w <= max_workers; w *= 2) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto preds = xdnn::predict_batch(model, xs, xdnn::ScaleMode::uniform, w);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (w == 1) base = s;
    std::cout << "workers " << w << ": " << static_cast<double>(queries) / s << " predictions/s, speedup "
              << base / s << " (" << preds.size() << " predictions)\n";
  }
  return 0;
}
