#ifndef XDNN_MEGACLOUDS_HPP
#define XDNN_MEGACLOUDS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xdnn/learner.hpp"

namespace xdnn {

/// Position of a cloud inside a model. Global cloud ids enumerate classes in ascending
/// class_id order and the clouds of each class in creation order.
struct CloudRef {
  std::uint32_t class_id = 0;
  std::size_t class_index = 0;  // position of the class in Model::classes
  std::size_t local_index = 0;  // position of the cloud in its class

  bool operator==(const CloudRef&) const = default;
};

std::vector<CloudRef> enumerate_clouds(const Model& model);

/// Undirected overlap graph over all clouds of a model.
struct CloudGraph {
  std::vector<CloudRef> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (i, j) with i < j, sorted
};

/// Edge (i, j) iff |p_i - p_j| <= r_i + r_j, across all classes.
CloudGraph build_adjacency(const Model& model);

struct MegaCloud {
  std::size_t id = 0;
  std::uint32_t class_id = 0;
  std::vector<std::size_t> member_cloud_ids;  // global ids, ascending
  std::vector<std::string> representative_refs;

  bool operator==(const MegaCloud&) const = default;
};

/// Connected components of the same-class part of the graph. MegaClouds are numbered by
/// their smallest member id, so every cloud lands in exactly one of them.
std::vector<MegaCloud> merge_megaclouds(const Model& model, const CloudGraph& graph);

/// MegaCloud id of every global cloud id.
std::vector<std::size_t> megacloud_assignment(const std::vector<MegaCloud>& megaclouds,
                                              std::size_t cloud_count);

struct Rule {
  std::uint32_t class_id = 0;
  std::vector<std::string> antecedent_refs;
  std::string rendered_text;

  bool operator==(const Rule&) const = default;
};

/// Renders `IF (I ~ <ref1>) OR (I ~ <ref2>) ... THEN (class <c>)`. Inside a ref,
/// backslash, ')' and line breaks are escaped as \\, \) and \n.
std::string render_rule(std::uint32_t class_id, const std::vector<std::string>& refs);

/// Inverse of render_rule. Throws FormatError on text that does not follow the grammar.
Rule parse_rule(std::string_view text);

/// One rule per class (ascending class_id); antecedents list the member clouds'
/// prototype refs MegaCloud by MegaCloud.
std::vector<Rule> generate_rules(const Model& model, const std::vector<MegaCloud>& megaclouds);

void write_rules(std::ostream& os, const std::vector<Rule>& rules);
std::vector<Rule> read_rules(std::istream& is);

/// Per-dimension variance of the normalized training data. Derived from the stored
/// normalization when present, otherwise the support-weighted variance of the prototypes.
VectorXd training_variance(const Model& model);

/// Indices of the two highest-variance dimensions (lowest index on ties). For a 1-D model
/// both entries are 0.
std::pair<Eigen::Index, Eigen::Index> projection_dims(const Model& model);

struct VizOptions {
  bool project = true;  // 2 columns (x, y) instead of every coordinate
};

/// Tab-separated prototype table with a header line: cloud_id, class_id, megacloud_id,
/// support, radius_sq, source_ref, then coordinates.
void export_viz(std::ostream& os, const Model& model, const std::vector<MegaCloud>& megaclouds,
                const VizOptions& options = {});

/// Square lattice of steps x steps points over [0,1]^2 in the two projection dimensions,
/// remaining coordinates held at `anchor`.
SampleMatrixXd projected_grid(const Model& model, const VectorXd& anchor, std::size_t steps);

/// Tab-separated typicality profile of every class over its own lattice (anchored at the
/// class mean): class_id, grid_index, coordinates of the projection dims, weight.
/// Weights of each class sum to one.
void export_typicality(std::ostream& os, const Model& model, std::size_t steps);

/// Same, over caller-supplied grid rows shared by all classes; coordinates are omitted.
void export_typicality(std::ostream& os, const Model& model, const SampleMatrixXd& grid);

/// Escapes tab, newline and backslash for delimiter-separated output.
std::string escape_field(std::string_view s);

}  // namespace xdnn

#endif  // XDNN_MEGACLOUDS_HPP
