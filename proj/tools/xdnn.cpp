// xdnn: command line front end for training, prediction, evaluation and inspection.

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "xdnn/harness.hpp"
#include "xdnn/megaclouds.hpp"
#include "xdnn/model_io.hpp"

namespace {

using namespace xdnn;

const std::map<std::string, ScaleMode> kScaleModes{{"uniform", ScaleMode::uniform}, {"per-cloud", ScaleMode::per_cloud}};

/// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

void print_summary(std::ostream& os, const Model& model, const std::vector<MegaCloud>& mcs) {
  std::map<std::uint32_t, std::size_t> mc_per_class;
  for (const auto& mc : mcs) ++mc_per_class[mc.class_id];
  os << "dimension: " << model.dimension << "\n";
  os << "classes: " << model.classes.size() << "\n";
  os << "prototypes (P): " << model.cloud_count() << "\n";
  os << "megaclouds (mc): " << mcs.size() << "\n";
  os << "config: " << fingerprint(model.config) << "\n\n";
  os << std::left << std::setw(8) << "class" << std::setw(20) << "label" << std::setw(8) << "P" << std::setw(6) << "mc"
     << std::setw(10) << "samples" << "supports\n";
  for (const auto& cm : model.classes) {
    os << std::setw(8) << cm.class_id << std::setw(20) << model.label_name(cm.class_id).substr(0, 19) << std::setw(8)
       << cm.clouds.size() << std::setw(6) << mc_per_class[cm.class_id] << std::setw(10) << cm.stats.count;
    for (std::size_t j = 0; j < cm.clouds.size(); ++j) os << (j ? "," : "") << cm.clouds[j].support;
    os << '\n';
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& cm : model.classes)
    for (const auto& c : cm.clouds) {
      lo = std::min(lo, c.radius_sq);
      hi = std::max(hi, c.radius_sq);
    }
  constexpr int kBins = 10;
  std::vector<std::size_t> bins(kBins, 0);
  const double width = (hi - lo) / kBins;
  for (const auto& cm : model.classes)
    for (const auto& c : cm.clouds) {
      int b = width > 0.0 ? static_cast<int>((c.radius_sq - lo) / width) : 0;
      ++bins[static_cast<std::size_t>(std::clamp(b, 0, kBins - 1))];
    }
  os << "\nradius_sq histogram [" << lo << ", " << hi << "]\n";
  for (int b = 0; b < kBins; ++b) {
    os << "  " << std::setw(24) << (std::to_string(lo + b * width) + " - " + std::to_string(lo + (b + 1) * width))
       << ' ' << bins[static_cast<std::size_t>(b)] << '\n';
  }
}

int run(int argc, char** argv) {
  CLI::App app{"xDNN: prototype-based explainable classifier over precomputed feature vectors"};
  app.require_subcommand(1);
  app.footer(std::string("Feature files: binary XDNF (little-endian) or CSV (.csv: label,source_ref,f0,...).\n"
                         "Splits use ") + kSplitAlgorithm + " seeded with --seed.");

  std::string features, model_path, out;
  std::uint64_t seed = 42;
  std::size_t repeats = 10;
  double train_ratio = 0.8;
  double initial_radius = initial_radius_sq<double>();
  ScaleMode scale_mode = ScaleMode::uniform;
  unsigned workers = 1;

  auto* train_cmd = app.add_subcommand("train", "Train a model from a feature file");
  train_cmd->add_option("--features", features, "Training feature file")->required();
  train_cmd->add_option("--out", out, "Model file to write")->required();
  train_cmd->add_option("--initial-radius", initial_radius, "Initial squared cloud radius (default 2-2cos30)")
      ->check(CLI::PositiveNumber);

  auto* predict_cmd = app.add_subcommand("predict", "Classify a feature file with a trained model");
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  predict_cmd->add_option("--features", features, "Feature file to classify")->required();
  predict_cmd->add_option("--out", out, "Prediction table (default stdout)");
  predict_cmd->add_option("--scale-mode", scale_mode, "Similarity scale: uniform|per-cloud")
      ->transform(CLI::CheckedTransformer(kScaleModes, CLI::ignore_case));
  predict_cmd->add_option("--workers", workers, "Prediction threads")->check(CLI::Range(1u, 256u));

  auto* eval_cmd = app.add_subcommand("evaluate", "Repeated stratified train/test evaluation");
  eval_cmd->add_option("--features", features, "Feature file")->required();
  eval_cmd->add_option("--seed", seed, "Split seed");
  eval_cmd->add_option("--repeats", repeats, "Number of random splits")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--train-ratio", train_ratio, "Training fraction per class")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--scale-mode", scale_mode, "Similarity scale: uniform|per-cloud")
      ->transform(CLI::CheckedTransformer(kScaleModes, CLI::ignore_case));
  eval_cmd->add_option("--initial-radius", initial_radius, "Initial squared cloud radius")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", out, "Machine-readable JSON report");

  auto* rules_cmd = app.add_subcommand("rules", "Write the IF-THEN rules of a model");
  rules_cmd->add_option("--model", model_path, "Model file")->required();
  rules_cmd->add_option("--out", out, "Rule file (default stdout)");

  std::string viz_out, typ_out, grid_file;
  std::size_t grid_steps = 21;
  bool full_coords = false;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a model and export visualization data");
  inspect_cmd->add_option("--model", model_path, "Model file")->required();
  inspect_cmd->add_option("--out", out, "Summary file (default stdout)");
  inspect_cmd->add_option("--viz-out", viz_out, "Prototype table (TSV)");
  inspect_cmd->add_flag("--full-coords", full_coords, "Write every coordinate instead of the 2-D projection");
  inspect_cmd->add_option("--typicality-out", typ_out, "Typicality profiles (TSV)");
  inspect_cmd->add_option("--grid-steps", grid_steps, "Lattice size per projected axis")->check(CLI::Range(1, 1000));
  inspect_cmd->add_option("--grid", grid_file, "Grid points in model space (feature file) instead of a lattice");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  TrainingConfig config;
  config.initial_radius_sq = initial_radius;

  if (*train_cmd) {
    const Dataset d = read_features(features);
    const Model m = fit(d, config);
    save_model(m, out);
    std::cerr << "trained " << m.classes.size() << " classes, " << m.cloud_count() << " prototypes from " << d.size()
              << " samples -> " << out << "\n";
  } else if (*predict_cmd) {
    const Model m = load_model(model_path);
    const Dataset d = read_features(features);
    const auto preds = classify(m, d.features, scale_mode, workers);
    std::ostringstream os;
    os << std::setprecision(17);
    os << "sample_id\tsource_ref\tpredicted_class\tpredicted_label";
    for (const auto& cm : m.classes) os << "\tlambda_" << cm.class_id;
    os << "\twinning_ref\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto& p = preds[i];
      os << i << '\t' << escape_field(d.refs[i]) << '\t' << p.label << '\t' << escape_field(m.label_name(p.label));
      for (const auto& s : p.per_class_scores) os << '\t' << s.lambda;
      os << '\t' << escape_field(p.winning_ref) << '\n';
    }
    emit(out, os.str());
  } else if (*eval_cmd) {
    const Dataset d = read_features(features);
    EvalOptions opts;
    opts.seed = seed;
    opts.repeats = repeats;
    opts.train_ratio = train_ratio;
    opts.scale_mode = scale_mode;
    const EvalReport report = evaluate(d, config, opts);
    print_report(std::cout, report);
    if (!out.empty()) write_file_atomic(out, report_to_json(report));
  } else if (*rules_cmd) {
    const Model m = load_model(model_path);
    const auto rules = generate_rules(m, merge_megaclouds(m, build_adjacency(m)));
    std::ostringstream os;
    write_rules(os, rules);
    emit(out, os.str());
  } else if (*inspect_cmd) {
    const Model m = load_model(model_path);
    const auto mcs = merge_megaclouds(m, build_adjacency(m));
    std::ostringstream os;
    print_summary(os, m, mcs);
    emit(out, os.str());
    if (!viz_out.empty()) {
      std::ostringstream v;
      export_viz(v, m, mcs, VizOptions{!full_coords});
      write_file_atomic(viz_out, v.str());
    }
    if (!typ_out.empty()) {
      std::ostringstream t;
      if (grid_file.empty()) {
        export_typicality(t, m, grid_steps);
      } else {
        export_typicality(t, m, read_features(grid_file).features);
      }
      write_file_atomic(typ_out, t.str());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const xdnn::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
  } catch (const xdnn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
  } catch (const xdnn::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
  } catch (const xdnn::DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
  } catch (const xdnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
