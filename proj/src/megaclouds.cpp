#include "xdnn/megaclouds.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "xdnn/density.hpp"
#include "xdnn/errors.hpp"

namespace xdnn {

namespace {

/// Union-find with path halving; the smaller root wins so component roots are minimal ids.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

const DataCloud<double>& cloud_at(const Model& model, const CloudRef& ref) {
  return model.classes[ref.class_index].clouds[ref.local_index];
}

}  // namespace

std::vector<CloudRef> enumerate_clouds(const Model& model) {
  std::vector<CloudRef> out;
  out.reserve(model.cloud_count());
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    for (std::size_t j = 0; j < model.classes[c].clouds.size(); ++j) {
      out.push_back({model.classes[c].class_id, c, j});
    }
  }
  return out;
}

CloudGraph build_adjacency(const Model& model) {
  CloudGraph g;
  g.nodes = enumerate_clouds(model);
  const std::size_t n = g.nodes.size();
  std::vector<double> radius(n);
  for (std::size_t i = 0; i < n; ++i) radius[i] = std::sqrt(cloud_at(model, g.nodes[i]).radius_sq);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pi = cloud_at(model, g.nodes[i]).prototype;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double reach = radius[i] + radius[j];
      if (euclidean_sq(pi, cloud_at(model, g.nodes[j]).prototype) <= reach * reach) {
        g.edges.emplace_back(i, j);
      }
    }
  }
  return g;
}

std::vector<MegaCloud> merge_megaclouds(const Model& model, const CloudGraph& graph) {
  const std::size_t n = graph.nodes.size();
  DisjointSets sets(n);
  for (const auto& [i, j] : graph.edges) {
    if (i >= n || j >= n) throw StateError("merge_megaclouds: edge refers to unknown cloud");
    if (graph.nodes[i].class_id == graph.nodes[j].class_id) sets.unite(i, j);
  }
  std::map<std::size_t, std::size_t> root_to_mc;
  std::vector<MegaCloud> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = root_to_mc.try_emplace(root, out.size());
    if (inserted) {
      MegaCloud mc;
      mc.id = out.size();
      mc.class_id = graph.nodes[i].class_id;
      out.push_back(std::move(mc));
    }
    auto& mc = out[it->second];
    mc.member_cloud_ids.push_back(i);
    mc.representative_refs.push_back(cloud_at(model, graph.nodes[i]).source_ref);
  }
  return out;
}

std::vector<std::size_t> megacloud_assignment(const std::vector<MegaCloud>& megaclouds,
                                              std::size_t cloud_count) {
  std::vector<std::size_t> out(cloud_count, static_cast<std::size_t>(-1));
  for (const auto& mc : megaclouds) {
    for (auto id : mc.member_cloud_ids) {
      if (id >= cloud_count) throw StateError("megacloud member " + std::to_string(id) + " out of range");
      out[id] = mc.id;
    }
  }
  return out;
}

std::string render_rule(std::uint32_t class_id, const std::vector<std::string>& refs) {
  std::string out = "IF ";
  for (std::size_t k = 0; k < refs.size(); ++k) {
    if (k > 0) out += " OR ";
    out += "(I ~ ";
    for (char ch : refs[k]) {
      switch (ch) {
        case '\\': out += "\\\\"; break;
        case ')': out += "\\)"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        default: out += ch;
      }
    }
    out += ')';
  }
  out += " THEN (class " + std::to_string(class_id) + ")";
  return out;
}

Rule parse_rule(std::string_view text) {
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError("rule: " + why + " in \"" + std::string(text.substr(0, 80)) + "\"");
  };
  auto eat = [&](std::string_view& s, std::string_view lit) {
    if (s.substr(0, lit.size()) != lit) return false;
    s.remove_prefix(lit.size());
    return true;
  };
  Rule rule;
  std::string_view s = text;
  if (!eat(s, "IF ")) throw fail("missing IF");
  for (;;) {
    if (!eat(s, "(I ~ ")) throw fail("expected '(I ~ '");
    std::string ref;
    bool closed = false;
    while (!s.empty()) {
      const char ch = s.front();
      s.remove_prefix(1);
      if (ch == ')') {
        closed = true;
        break;
      }
      if (ch == '\\') {
        if (s.empty()) throw fail("dangling escape");
        const char e = s.front();
        s.remove_prefix(1);
        if (e == '\\' || e == ')') ref += e;
        else if (e == 'n') ref += '\n';
        else if (e == 'r') ref += '\r';
        else throw fail("unknown escape");
      } else {
        ref += ch;
      }
    }
    if (!closed) throw fail("unterminated antecedent");
    rule.antecedent_refs.push_back(std::move(ref));
    if (eat(s, " OR ")) continue;
    if (eat(s, " THEN (class ")) break;
    throw fail("expected OR or THEN");
  }
  if (s.size() < 2 || s.back() != ')') throw fail("missing closing parenthesis");
  s.remove_suffix(1);
  if (s.empty() || s.size() > 10 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw fail("bad class id");
  }
  const unsigned long long id = std::stoull(std::string(s));
  if (id > 0xFFFFFFFFull) throw fail("class id out of range");
  rule.class_id = static_cast<std::uint32_t>(id);
  rule.rendered_text = std::string(text);
  return rule;
}

std::vector<Rule> generate_rules(const Model& model, const std::vector<MegaCloud>& megaclouds) {
  std::map<std::uint32_t, std::vector<std::string>> refs;
  for (const auto& mc : megaclouds) {
    auto& r = refs[mc.class_id];
    r.insert(r.end(), mc.representative_refs.begin(), mc.representative_refs.end());
  }
  std::vector<Rule> out;
  for (const auto& cm : model.classes) {
    auto it = refs.find(cm.class_id);
    if (it == refs.end()) continue;
    Rule rule;
    rule.class_id = cm.class_id;
    rule.antecedent_refs = it->second;
    rule.rendered_text = render_rule(rule.class_id, rule.antecedent_refs);
    out.push_back(std::move(rule));
  }
  return out;
}

void write_rules(std::ostream& os, const std::vector<Rule>& rules) {
  for (const auto& r : rules) os << r.rendered_text << '\n';
}

std::vector<Rule> read_rules(std::istream& is) {
  std::vector<Rule> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(parse_rule(line));
  }
  return out;
}

VectorXd training_variance(const Model& model) {
  const auto n = model.dimension;
  VectorXd var = VectorXd::Zero(n);
  if (!model.normalization.empty()) {
    // Standardized columns have unit sample variance, so after min-max scaling the
    // variance is 1 / range^2 (0 for constant columns).
    for (Eigen::Index j = 0; j < n; ++j) {
      const double range = model.normalization.max(j) - model.normalization.min(j);
      var(j) = (model.normalization.std(j) > 0.0 && range > 0.0) ? 1.0 / (range * range) : 0.0;
    }
    return var;
  }
  double total = 0.0;
  VectorXd mean = VectorXd::Zero(n);
  for (const auto& cm : model.classes) {
    for (const auto& c : cm.clouds) {
      mean += static_cast<double>(c.support) * c.prototype;
      total += static_cast<double>(c.support);
    }
  }
  if (total == 0.0) return var;
  mean /= total;
  for (const auto& cm : model.classes) {
    for (const auto& c : cm.clouds) {
      var += static_cast<double>(c.support) * (c.prototype - mean).array().square().matrix();
    }
  }
  return var / total;
}

std::pair<Eigen::Index, Eigen::Index> projection_dims(const Model& model) {
  const VectorXd var = training_variance(model);
  if (var.size() < 2) return {0, 0};
  std::vector<Eigen::Index> order(static_cast<std::size_t>(var.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return var(a) > var(b); });
  return {order[0], order[1]};
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += ch;
    }
  }
  return out;
}

void export_viz(std::ostream& os, const Model& model, const std::vector<MegaCloud>& megaclouds,
                const VizOptions& options) {
  const auto nodes = enumerate_clouds(model);
  const auto assignment = megacloud_assignment(megaclouds, nodes.size());
  const auto [dx, dy] = projection_dims(model);
  const auto old_precision = os.precision(17);

  os << "cloud_id\tclass_id\tmegacloud_id\tsupport\tradius_sq\tsource_ref";
  if (options.project) {
    os << "\tx\ty";
  } else {
    for (Eigen::Index j = 0; j < model.dimension; ++j) os << "\tp" << j;
  }
  os << '\n';
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& c = cloud_at(model, nodes[i]);
    os << i << '\t' << nodes[i].class_id << '\t' << assignment[i] << '\t' << c.support << '\t' << c.radius_sq
       << '\t' << escape_field(c.source_ref);
    if (options.project) {
      os << '\t' << c.prototype(dx) << '\t' << c.prototype(dy);
    } else {
      for (Eigen::Index j = 0; j < c.prototype.size(); ++j) os << '\t' << c.prototype(j);
    }
    os << '\n';
  }
  os.precision(old_precision);
}

SampleMatrixXd projected_grid(const Model& model, const VectorXd& anchor, std::size_t steps) {
  if (steps < 1) throw StateError("projected_grid: steps must be >= 1");
  if (anchor.size() != model.dimension) throw DimensionError("projected_grid: anchor dimension mismatch");
  const auto [dx, dy] = projection_dims(model);
  const auto count = static_cast<Eigen::Index>(steps * steps);
  SampleMatrixXd grid = anchor.transpose().replicate(count, 1);
  auto coord = [&](std::size_t k) { return steps == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(steps - 1); };
  Eigen::Index row = 0;
  for (std::size_t a = 0; a < steps; ++a) {
    for (std::size_t b = 0; b < steps; ++b, ++row) {
      grid(row, dx) = coord(a);
      grid(row, dy) = coord(b);
    }
  }
  return grid;
}

void export_typicality(std::ostream& os, const Model& model, std::size_t steps) {
  const auto [dx, dy] = projection_dims(model);
  const auto old_precision = os.precision(17);
  os << "class_id\tgrid_index\tx\ty\tweight\n";
  for (const auto& cm : model.classes) {
    const SampleMatrixXd grid = projected_grid(model, cm.stats.mean, steps);
    const auto w = typicality(std::span<const DataCloud<double>>(cm.clouds), grid);
    for (Eigen::Index k = 0; k < grid.rows(); ++k) {
      os << cm.class_id << '\t' << k << '\t' << grid(k, dx) << '\t' << grid(k, dy) << '\t'
         << w[static_cast<std::size_t>(k)] << '\n';
    }
  }
  os.precision(old_precision);
}

void export_typicality(std::ostream& os, const Model& model, const SampleMatrixXd& grid) {
  if (grid.cols() != model.dimension) throw DimensionError("export_typicality: grid dimension mismatch");
  const auto old_precision = os.precision(17);
  os << "class_id\tgrid_index\tweight\n";
  for (const auto& cm : model.classes) {
    const auto w = typicality(std::span<const DataCloud<double>>(cm.clouds), grid);
    for (Eigen::Index k = 0; k < grid.rows(); ++k) {
      os << cm.class_id << '\t' << k << '\t' << w[static_cast<std::size_t>(k)] << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace xdnn
