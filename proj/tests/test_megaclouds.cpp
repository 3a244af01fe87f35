#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "xdnn/megaclouds.hpp"

using namespace xdnn;

namespace {

Model pair_model(double distance, double r, std::uint32_t second_class = 0) {
  Model m;
  m.dimension = 2;
  for (std::uint32_t c = 0; c <= second_class; ++c) {
    ClassModel<double> cm;
    cm.class_id = c;
    m.classes.push_back(cm);
  }
  auto add = [&](std::uint32_t cls, double x, std::string ref) {
    DataCloud<double> c;
    c.class_id = cls;
    c.prototype = VectorXd::Zero(2);
    c.prototype(0) = x;
    c.radius_sq = r * r;
    c.source_ref = std::move(ref);
    m.classes[cls].clouds.push_back(std::move(c));
  };
  add(0, 0.0, "a");
  add(second_class, distance, "b");
  return m;
}

/// Independent component oracle: repeated relaxation of labels over same-class edges.
std::vector<std::size_t> component_oracle(const CloudGraph& g) {
  std::vector<std::size_t> label(g.nodes.size());
  for (std::size_t i = 0; i < label.size(); ++i) label[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [i, j] : g.edges) {
      if (g.nodes[i].class_id != g.nodes[j].class_id) continue;
      const auto m = std::min(label[i], label[j]);
      if (label[i] != m || label[j] != m) {
        label[i] = label[j] = m;
        changed = true;
      }
    }
  }
  return label;
}

}  // namespace

TEST_CASE("adjacency uses overlapping areas of influence") {
  CHECK(build_adjacency(pair_model(0.3, 0.2)).edges.size() == 1);
  CHECK(build_adjacency(pair_model(1.0, 0.2)).edges.empty());
  CHECK(build_adjacency(pair_model(0.4, 0.2)).edges.size() == 1);  // touching counts

  Model single = pair_model(1.0, 0.2);
  single.classes[0].clouds.pop_back();
  CHECK(build_adjacency(single).edges.empty());
  CHECK(merge_megaclouds(single, build_adjacency(single)).size() == 1);
}

TEST_CASE("merging never crosses classes") {
  // same class, adjacent -> merged
  const Model same = pair_model(0.3, 0.2);
  auto mcs = merge_megaclouds(same, build_adjacency(same));
  REQUIRE(mcs.size() == 1);
  CHECK(mcs[0].member_cloud_ids == std::vector<std::size_t>{0, 1});

  // different classes, adjacent -> separate
  const Model cross = pair_model(0.3, 0.2, 1);
  CHECK(build_adjacency(cross).edges.size() == 1);
  CHECK(merge_megaclouds(cross, build_adjacency(cross)).size() == 2);
}

TEST_CASE("three-node chain: A-B same class, B-C other class") {
  Model m;
  m.dimension = 1;
  ClassModel<double> c0, c1;
  c0.class_id = 0;
  c1.class_id = 1;
  auto cloud = [](std::uint32_t cls, double x, std::string ref) {
    DataCloud<double> c;
    c.class_id = cls;
    c.prototype = VectorXd::Constant(1, x);
    c.radius_sq = 0.01;  // r = 0.1
    c.source_ref = std::move(ref);
    return c;
  };
  c0.clouds = {cloud(0, 0.0, "A"), cloud(0, 0.15, "B")};
  c1.clouds = {cloud(1, 0.3, "C")};
  m.classes = {c0, c1};
  const auto g = build_adjacency(m);
  CHECK(g.edges == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}});
  const auto mcs = merge_megaclouds(m, g);
  REQUIRE(mcs.size() == 2);
  CHECK(mcs[0].member_cloud_ids == std::vector<std::size_t>{0, 1});
  CHECK(mcs[0].representative_refs == std::vector<std::string>{"A", "B"});
  CHECK(mcs[1].member_cloud_ids == std::vector<std::size_t>{2});
  CHECK(mcs[1].class_id == 1);
  const auto oracle = component_oracle(g);
  CHECK(oracle == std::vector<std::size_t>{0, 0, 2});
}

TEST_CASE("megaclouds partition random models") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 30; ++trial) {
    const Model m = xdnn::testing::random_model(rng, 1 + rng() % 4, 1 + rng() % 15, 2, 0.0, 0.05);
    const auto g = build_adjacency(m);
    const auto mcs = merge_megaclouds(m, g);
    const auto oracle = component_oracle(g);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& mc : mcs) {
      for (auto id : mc.member_cloud_ids) {
        CHECK(seen.insert(id).second);
        CHECK(g.nodes[id].class_id == mc.class_id);
        CHECK(oracle[id] == oracle[mc.member_cloud_ids.front()]);
      }
      total += mc.member_cloud_ids.size();
    }
    CHECK(total == m.cloud_count());
    CHECK(mcs.size() <= m.cloud_count());
    CHECK(std::set<std::size_t>(oracle.begin(), oracle.end()).size() == mcs.size());
  }
}

TEST_CASE("rules: golden file") {
  const Model m = xdnn::testing::golden_model();
  const auto mcs = merge_megaclouds(m, build_adjacency(m));
  REQUIRE(mcs.size() == 4);
  std::ostringstream os;
  write_rules(os, generate_rules(m, mcs));
  CHECK(os.str() == xdnn::testing::read_text(XDNN_TEST_DATA_DIR "/golden_rules.txt"));
}

TEST_CASE("rules: shapes") {
  CHECK(render_rule(3, {"only.png"}) == "IF (I ~ only.png) THEN (class 3)");

  // three isolated clouds in one class -> three MegaClouds -> three OR-groups
  Model m;
  m.dimension = 1;
  ClassModel<double> cm;
  cm.class_id = 0;
  for (int k = 0; k < 3; ++k) {
    DataCloud<double> c;
    c.prototype = VectorXd::Constant(1, k);
    c.radius_sq = 0.01;
    c.source_ref = "p" + std::to_string(k);
    cm.clouds.push_back(c);
  }
  m.classes = {cm};
  const auto mcs = merge_megaclouds(m, build_adjacency(m));
  CHECK(mcs.size() == 3);
  const auto rules = generate_rules(m, mcs);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].rendered_text == "IF (I ~ p0) OR (I ~ p1) OR (I ~ p2) THEN (class 0)");
}

TEST_CASE("rules round-trip through the parser") {
  std::mt19937_64 rng(83);
  const std::string alphabet = "abcXYZ09 ()~\\/.-_\n";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> refs(1 + rng() % 6);
    for (auto& r : refs) {
      const auto len = rng() % 12;
      for (std::size_t k = 0; k < len; ++k) r += alphabet[rng() % alphabet.size()];
    }
    const auto id = static_cast<std::uint32_t>(rng() % 1000);
    const auto text = render_rule(id, refs);
    CHECK(text.find('\n') == std::string::npos);
    const auto parsed = parse_rule(text);
    CHECK(parsed.class_id == id);
    CHECK(parsed.antecedent_refs == refs);
  }
  CHECK_THROWS_AS(parse_rule("IF (I ~ a) THEN class 1"), FormatError);
  CHECK_THROWS_AS(parse_rule("IF (I ~ a) (I ~ b) THEN (class 1)"), FormatError);
  CHECK_THROWS_AS(parse_rule("IF (I ~ a) THEN (class x)"), FormatError);
  CHECK_THROWS_AS(parse_rule("WHEN (I ~ a) THEN (class 1)"), FormatError);
}

TEST_CASE("visualization export") {
  const Model m = xdnn::testing::golden_model();
  const auto mcs = merge_megaclouds(m, build_adjacency(m));
  std::ostringstream os;
  export_viz(os, m, mcs);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "cloud_id\tclass_id\tmegacloud_id\tsupport\tradius_sq\tsource_ref\tx\ty");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream fields(line);
    std::size_t cloud_id, class_id, mc_id;
    fields >> cloud_id >> class_id >> mc_id;
    CHECK(mc_id < mcs.size());
  }
  CHECK(rows == m.cloud_count());

  std::ostringstream full;
  export_viz(full, m, mcs, VizOptions{false});
  CHECK(full.str().substr(0, full.str().find('\n')).ends_with("\tp0\tp1"));
}

TEST_CASE("projection picks the highest-variance dimensions") {
  Model m;
  m.dimension = 3;
  m.normalization.mean = VectorXd::Zero(3);
  m.normalization.std = VectorXd::Ones(3);
  m.normalization.min = VectorXd::Constant(3, -1.0);
  m.normalization.max = VectorXd(3);
  m.normalization.max << 3.0, 0.0, 1.0;  // ranges 4, 1, 2 -> variances 1/16, 1, 1/4
  const auto [a, b] = projection_dims(m);
  CHECK(a == 1);
  CHECK(b == 2);
}

TEST_CASE("typicality export rows sum to one per class") {
  std::mt19937_64 rng(89);
  const Model m = xdnn::testing::random_model(rng, 3, 6, 4);
  for (std::size_t steps : {1u, 5u, 12u}) {
    std::ostringstream os;
    export_typicality(os, m, steps);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    std::map<std::uint32_t, double> sums;
    std::map<std::uint32_t, std::size_t> counts;
    while (std::getline(in, line)) {
      std::istringstream f(line);
      std::uint32_t c;
      std::size_t k;
      double x, y, w;
      f >> c >> k >> x >> y >> w;
      sums[c] += w;
      ++counts[c];
    }
    for (const auto& [c, s] : sums) {
      CHECK(std::abs(s - 1.0) <= 1e-9);
      CHECK(counts[c] == steps * steps);
    }
  }
}
