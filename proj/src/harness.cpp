#include "xdnn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

#include "json.hpp"
#include "xdnn/megaclouds.hpp"

namespace xdnn {

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  if (predicted.size() != truth.size()) {
    throw StateError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw StateError("accuracy: no samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth,
                                 std::size_t class_count) {
  if (predicted.size() != truth.size()) throw StateError("confusion_matrix: length mismatch");
  ConfusionMatrix m(class_count, std::vector<std::size_t>(class_count, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= class_count || predicted[i] >= class_count) {
      throw StateError("confusion_matrix: class index out of range");
    }
    ++m[truth[i]][predicted[i]];
  }
  return m;
}

Model fit(const Dataset& train_set, const TrainingConfig& config) {
  train_set.check();
  const auto params = fit_normalization(train_set.features);
  const SampleMatrixXd x = apply_normalization(train_set.features, params);
  Model m = train(x, std::span<const std::uint32_t>(train_set.labels),
                  std::span<const std::string>(train_set.refs), config);
  m.normalization = params;
  m.label_names = train_set.label_names;
  return m;
}

std::vector<Prediction> classify(const Model& model, const SampleMatrixXd& raw, ScaleMode mode, unsigned workers) {
  if (raw.rows() == 0) return {};
  return predict_batch(model, model.prepare(raw), mode, workers);
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw StateError("bounded_draw: zero bound");
  // Largest multiple of bound representable in 64 bits; draws at or above it are rejected.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return v % bound;
  }
}

Split stratified_split(std::span<const std::uint32_t> labels, double train_ratio, std::mt19937_64& rng) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw StateError("train_ratio must lie in (0, 1)");
  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Split split;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      throw DataError("class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                      " sample(s); at least 2 are needed to split");
    }
    portable_shuffle(idx, rng);
    const auto n = static_cast<double>(idx.size());
    auto n_train = static_cast<std::size_t>(std::llround(train_ratio * n));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

EvalReport evaluate(const Dataset& dataset, const TrainingConfig& config, const EvalOptions& options) {
  dataset.check();
  validate(config);
  if (options.repeats < 1) throw StateError("evaluate: repeats must be >= 1");
  std::map<std::uint32_t, std::size_t> per_class;
  for (auto l : dataset.labels) ++per_class[l];
  for (const auto& [label, n] : per_class) {
    if (n < 2) {
      throw DataError("class " + std::to_string(label) + " (\"" + dataset.label_names[label] + "\") has " +
                      std::to_string(n) + " sample(s); at least 2 are needed");
    }
  }
  if (per_class.size() < 2) throw DataError("evaluate: dataset needs at least 2 classes");

  EvalReport report;
  report.options = options;
  report.config = config;
  report.label_names = dataset.label_names;
  const std::size_t k = dataset.label_names.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));

  std::mt19937_64 rng(options.seed);
  for (std::size_t r = 0; r < options.repeats; ++r) {
    const Split split = stratified_split(dataset.labels, options.train_ratio, rng);
    const Dataset train_set = dataset.subset(split.train);
    const Dataset test_set = dataset.subset(split.test);

    const auto params = fit_normalization(train_set.features);
    const SampleMatrixXd x_train = apply_normalization(train_set.features, params);

    const auto t0 = std::chrono::steady_clock::now();
    Model model = train(x_train, std::span<const std::uint32_t>(train_set.labels),
                        std::span<const std::string>(train_set.refs), config);
    const auto t1 = std::chrono::steady_clock::now();
    model.normalization = params;
    model.label_names = dataset.label_names;

    const auto preds = classify(model, test_set.features, options.scale_mode);
    std::vector<std::uint32_t> predicted;
    predicted.reserve(preds.size());
    for (const auto& p : preds) predicted.push_back(p.label);

    SplitResult res;
    res.accuracy = accuracy(predicted, test_set.labels);
    res.train_seconds = std::chrono::duration<double>(t1 - t0).count();
    res.prototypes = model.cloud_count();
    res.megaclouds = merge_megaclouds(model, build_adjacency(model)).size();
    res.train_size = train_set.size();
    res.test_size = test_set.size();
    report.splits.push_back(res);

    const auto cm = confusion_matrix(predicted, test_set.labels, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) report.confusion[a][b] += cm[a][b];
  }

  double sum = 0.0;
  for (const auto& s : report.splits) {
    sum += s.accuracy;
    report.total_train_seconds += s.train_seconds;
  }
  const auto n = static_cast<double>(report.splits.size());
  report.mean_accuracy = sum / n;
  if (report.splits.size() > 1) {
    double ss = 0.0;
    for (const auto& s : report.splits) ss += (s.accuracy - report.mean_accuracy) * (s.accuracy - report.mean_accuracy);
    report.std_accuracy = std::sqrt(ss / (n - 1.0));
  }
  return report;
}

void print_report(std::ostream& os, const EvalReport& report) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "xDNN evaluation: " << report.splits.size() << " stratified splits, train ratio "
     << report.options.train_ratio << ", seed " << report.options.seed << " (" << kSplitAlgorithm << ")\n";
  os << "scale mode: " << (report.options.scale_mode == ScaleMode::uniform ? "uniform" : "per-cloud")
     << ", config: " << fingerprint(report.config) << "\n\n";
  os << std::left << std::setw(7) << "split" << std::setw(10) << "accuracy" << std::setw(13) << "train_time_s"
     << std::setw(8) << "P" << std::setw(6) << "mc" << std::setw(8) << "train" << "test\n";
  for (std::size_t i = 0; i < report.splits.size(); ++i) {
    const auto& s = report.splits[i];
    os << std::left << std::setw(7) << i << std::setw(10) << std::fixed << std::setprecision(4) << s.accuracy
       << std::setw(13) << std::setprecision(6) << s.train_seconds << std::setw(8) << s.prototypes << std::setw(6)
       << s.megaclouds << std::setw(8) << s.train_size << s.test_size << '\n';
  }
  os << "\nmean accuracy: " << std::setprecision(4) << report.mean_accuracy * 100.0 << "% (std "
     << report.std_accuracy * 100.0 << " pp)\n";
  os << "total training time: " << std::setprecision(6) << report.total_train_seconds << " s\n";
  os << "\nconfusion matrix (rows: true, columns: predicted), summed over splits\n";
  for (std::size_t a = 0; a < report.confusion.size(); ++a) {
    os << std::setw(16) << report.label_names[a].substr(0, 15);
    for (auto c : report.confusion[a]) os << ' ' << std::right << std::setw(6) << c;
    os << std::left << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["split_algorithm"] = kSplitAlgorithm;
  j["seed"] = report.options.seed;
  j["repeats"] = report.options.repeats;
  j["train_ratio"] = report.options.train_ratio;
  j["scale_mode"] = report.options.scale_mode == ScaleMode::uniform ? "uniform" : "per-cloud";
  j["config_fingerprint"] = fingerprint(report.config);
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;
  j["total_train_seconds"] = report.total_train_seconds;
  auto splits = nlohmann::ordered_json::array();
  for (const auto& s : report.splits) {
    splits.push_back({{"accuracy", s.accuracy},
                      {"train_seconds", s.train_seconds},
                      {"prototypes", s.prototypes},
                      {"megaclouds", s.megaclouds},
                      {"train_size", s.train_size},
                      {"test_size", s.test_size}});
  }
  j["splits"] = std::move(splits);
  j["label_names"] = report.label_names;
  j["confusion"] = report.confusion;
  return j.dump(2) + "\n";
}

}  // namespace xdnn
