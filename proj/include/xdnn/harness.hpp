#ifndef XDNN_HARNESS_HPP
#define XDNN_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xdnn/dataset.hpp"
#include "xdnn/inference.hpp"
#include "xdnn/learner.hpp"

namespace xdnn {

/// Fraction of predictions equal to the truth. Throws StateError on empty or unequal input.
double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

/// counts[t][p]: samples of true class t predicted as p.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;
ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                                 std::size_t class_count);

/// Fits normalization on the raw training rows, normalizes them and trains.
Model fit(const Dataset& train_set, const TrainingConfig& config = {});

/// Normalizes raw rows with the model's parameters and classifies them.
std::vector<Prediction> classify(const Model& model, const SampleMatrixXd& raw,
                                 ScaleMode mode = ScaleMode::uniform, unsigned workers = 1);

/// Portable random source for splitting: std::mt19937_64 (fully specified by the
/// standard) with Fisher-Yates shuffling driven by rejection-sampled bounded draws,
/// so a seed yields the same splits on every platform.
inline constexpr const char* kSplitAlgorithm = "mt19937_64/fisher-yates/rejection";

/// Uniform integer in [0, bound) from a 64-bit engine, without modulo bias.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

template <typename T>
void portable_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

struct Split {
  std::vector<std::size_t> train;  // ascending dataset order
  std::vector<std::size_t> test;   // ascending dataset order
};

/// Per class (ascending label), shuffles that class's indices and sends
/// clamp(round(ratio * n_c), 1, n_c - 1) of them to training.
Split stratified_split(std::span<const std::uint32_t> labels, double train_ratio, std::mt19937_64& rng);

struct EvalOptions {
  std::size_t repeats = 10;
  double train_ratio = 0.8;
  std::uint64_t seed = 42;
  ScaleMode scale_mode = ScaleMode::uniform;
};

struct SplitResult {
  double accuracy = 0.0;
  double train_seconds = 0.0;  // learner only: normalization fit, file I/O and prediction excluded
  std::size_t prototypes = 0;
  std::size_t megaclouds = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

struct EvalReport {
  std::vector<SplitResult> splits;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation over splits, 0 for one split
  double total_train_seconds = 0.0;
  ConfusionMatrix confusion;  // summed over splits
  std::vector<std::string> label_names;
  EvalOptions options;
  TrainingConfig config;
};

/// Repeated stratified random train/test evaluation. Deterministic given the seed
/// (apart from the wall-clock timings).
EvalReport evaluate(const Dataset& dataset, const TrainingConfig& config = {}, const EvalOptions& options = {});

void print_report(std::ostream& os, const EvalReport& report);
/// Machine-readable JSON form of the report.
std::string report_to_json(const EvalReport& report);

}  // namespace xdnn

#endif  // XDNN_HARNESS_HPP
