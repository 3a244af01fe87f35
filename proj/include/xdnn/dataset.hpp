#ifndef XDNN_DATASET_HPP
#define XDNN_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "xdnn/errors.hpp"
#include "xdnn/feature_space.hpp"

namespace xdnn {

/// Labelled feature vectors: row i of `features` has class `labels[i]` and came from `refs[i]`.
struct Dataset {
  SampleMatrixXd features;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> refs;
  std::vector<std::string> label_names;

  std::size_t size() const { return labels.size(); }
  Eigen::Index dimension() const { return features.cols(); }

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.label_names = label_names;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.reserve(rows.size());
    out.refs.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(rows[k]));
      out.labels.push_back(labels[rows[k]]);
      out.refs.push_back(refs[rows[k]]);
    }
    return out;
  }

  /// Throws DimensionError / DataError if the parts disagree.
  void check() const {
    if (static_cast<std::size_t>(features.rows()) != labels.size() || refs.size() != labels.size()) {
      throw DimensionError("dataset: features, labels and refs disagree in length");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= label_names.size()) {
        throw DataError("dataset: sample " + std::to_string(i) + " has class index " +
                        std::to_string(labels[i]) + " >= label count " + std::to_string(label_names.size()));
      }
    }
  }

  bool operator==(const Dataset& o) const {
    return labels == o.labels && refs == o.refs && label_names == o.label_names &&
           identical(features, o.features);
  }
};

}  // namespace xdnn

#endif  // XDNN_DATASET_HPP
