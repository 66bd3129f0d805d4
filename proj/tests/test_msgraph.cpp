// Copyright 2026 The ctxreject Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>

#include "ctxreject/errors.hpp"
#include "ctxreject/msgraph.hpp"
#include "ctxreject/pipeline.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ctxreject;

namespace {

Partition manual_partition(int w, int h, std::vector<int> assignment) {
  Partition p;
  p.width = w;
  p.height = h;
  p.assignment = std::move(assignment);
  p.num_superpixels = *std::max_element(p.assignment.begin(), p.assignment.end()) + 1;
  return p;
}

std::set<std::pair<int, int>> brute_adjacency(const Partition& p) {
  std::set<std::pair<int, int>> out;
  for (int a = 0; a < p.width * p.height; ++a)
    for (int b = 0; b < p.width * p.height; ++b) {
      const int ax = a % p.width, ay = a / p.width, bx = b % p.width, by = b / p.width;
      if (std::abs(ax - bx) + std::abs(ay - by) != 1) continue;
      const int i = p.assignment[a], j = p.assignment[b];
      if (i < j) out.insert({i, j});
    }
  return out;
}

}  // namespace

TEST_CASE("half split has one intrascale edge") {
  std::vector<int> a(16);
  for (int i = 0; i < 16; ++i) a[i] = (i % 4) < 2 ? 0 : 1;
  const auto e = build_intrascale_edges(manual_partition(4, 4, a));
  REQUIRE(e.size() == 1);
  CHECK(e[0] == std::pair<int, int>{0, 1});
}

TEST_CASE("quadrants have four edges, no diagonals") {
  std::vector<int> a(16);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) a[y * 4 + x] = (y >= 2) * 2 + (x >= 2);
  const Partition p = manual_partition(4, 4, a);
  const auto e = build_intrascale_edges(p);
  CHECK(e.size() == 4);
  const auto brute = brute_adjacency(p);
  CHECK(std::set<std::pair<int, int>>(e.begin(), e.end()) == brute);
  CHECK(std::find(e.begin(), e.end(), std::pair<int, int>{0, 3}) == e.end());
}

TEST_CASE("single superpixel has no edges") {
  CHECK(build_intrascale_edges(manual_partition(3, 3, std::vector<int>(9, 0))).empty());
}

TEST_CASE("intrascale edges match brute-force adjacency on real partitions") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Image img = testutil::noise_image(18, 14, seed);
    const Partition p = oversegment(img, {0.4, 0.8}, 6);
    const auto e = build_intrascale_edges(p);
    CHECK(std::is_sorted(e.begin(), e.end()));
    CHECK(std::set<std::pair<int, int>>(e.begin(), e.end()) == brute_adjacency(p));
  }
}

TEST_CASE("interscale parent is the maximum overlap") {
  // Fine superpixel 0 lies inside coarse 0; fine 1 is split 60/40.
  const Partition fine = manual_partition(10, 1, {0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
  const Partition coarse = manual_partition(10, 1, {0, 0, 0, 0, 0, 1, 1, 1, 0, 0});
  const auto parent = build_interscale_edges(fine, coarse);
  CHECK(parent[0] == 0);
  CHECK(parent[1] == 1);
  // A 50/50 tie goes to the smaller coarse id.
  CHECK(build_interscale_edges(manual_partition(4, 1, {0, 0, 0, 0}),
                               manual_partition(4, 1, {1, 1, 0, 0}))[0] == 0);
  // Single coarse node: every fine node links to it.
  const auto all = build_interscale_edges(fine, manual_partition(10, 1, std::vector<int>(10, 0)));
  CHECK(all == std::vector<int>{0, 0});
}

TEST_CASE("edge weight values") {
  Eigen::VectorXd f(3), g(3);
  f << 0.2, 0.4, 0.6;
  CHECK(edge_weight(f, f, true, 0.05, 1.0, 4.0) == 1.0);
  CHECK(edge_weight(f, f, false, 0.05, 1.0, 4.0) == 4.0);
  g = f;
  g(0) += std::sqrt(0.05);
  CHECK(edge_weight(f, g, true, 0.05, 1.0, 4.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // Non-decreasing in gamma.
  double prev = 0.0;
  for (double gamma : {0.001, 0.01, 0.1, 1.0, 10.0}) {
    const double w = edge_weight(f, g, true, gamma, 1.0, 4.0);
    CHECK(w >= prev);
    prev = w;
  }
}

TEST_CASE("graph assembly") {
  const Image img = testutil::noise_image(30, 20, 6);
  const std::vector<int> mss = {8, 600};
  const auto parts = multiscale_partition(img, {0.4, 0.8}, mss);
  const FeatureImage sim = pixel_features(img, FeatureKind::kSimilarity);
  std::vector<FeatureMatrix> feats;
  for (const auto& p : parts) feats.push_back(superpixel_stats(p, sim, FeatureKind::kSimilarity));

  SUBCASE("single scale") {
    const MultiscaleGraph g = assemble_graph({parts[0]}, {feats[0]}, {});
    CHECK(g.interscale_edges.empty());
    CHECK(g.intrascale_edges.size() == build_intrascale_edges(parts[0]).size());
    CHECK(g.num_nodes() == parts[0].num_superpixels);
  }
  SUBCASE("coarse scale with one node") {
    REQUIRE(parts[1].num_superpixels == 1);
    const MultiscaleGraph g = assemble_graph(parts, feats, {});
    CHECK(static_cast<int>(g.interscale_edges.size()) == parts[0].num_superpixels);
    CHECK(g.num_nodes() == parts[0].num_superpixels + 1);
    CHECK(validate_graph(g, 4.0).empty());
  }
  SUBCASE("mismatched inputs") {
    CHECK_THROWS_AS(assemble_graph(parts, {feats[0]}, {}), DataError);
    CHECK_THROWS_AS(assemble_graph({parts[0]}, {feats[1]}, {}), DataError);
  }
}

TEST_CASE("six-scale synthetic graph passes the structural checks and is connected") {
  const SyntheticScene syn = make_synthetic(128, 96, 3, 0.15, 4);
  PipelineConfig cfg;
  cfg.mss_list = {16, 32, 64, 128, 256, 512};
  cfg.seg_k = 0.1;
  const Scene scene = build_scene(syn.image, cfg);
  const MultiscaleGraph& g = scene.graph;
  CHECK(g.num_scales() == 6);
  CHECK(validate_graph(g, 4.0).empty());
  int total = 0;
  for (const auto& p : scene.partitions) total += p.num_superpixels;
  CHECK(g.num_nodes() == total);
  // Independent structural walk.
  std::vector<int> up(g.num_nodes(), 0), down(g.num_nodes(), 0);
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.all_edges()) {
    CHECK(e.a < e.b);
    CHECK(seen.insert({e.a, e.b}).second);
    CHECK(e.weight > 0.0);
    CHECK(e.weight <= 4.0);
    if (e.kind == EdgeKind::kInterscale) {
      CHECK(g.node_scale[e.b] == g.node_scale[e.a] + 1);
      ++up[e.a];
      ++down[e.b];
    } else {
      CHECK(g.node_scale[e.a] == g.node_scale[e.b]);
    }
  }
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (g.node_scale[v] < 6) CHECK(up[v] == 1);
    if (g.node_scale[v] > 1) CHECK(down[v] >= 1);
  }
  // Connectivity by BFS.
  std::vector<std::vector<int>> adj(g.num_nodes());
  for (const auto& e : g.all_edges()) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<char> vis(g.num_nodes(), 0);
  std::queue<int> q;
  q.push(0);
  vis[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v])
      if (!vis[w]) {
        vis[w] = 1;
        ++reached;
        q.push(w);
      }
  }
  CHECK(reached == g.num_nodes());
}

TEST_CASE("pruning drops weak intrascale edges only") {
  const SyntheticScene syn = make_synthetic(64, 64, 2, 0.15, 1);
  PipelineConfig cfg;
  cfg.mss_list = {16, 64};
  cfg.seg_k = 0.1;
  cfg.gamma = 0.003;
  const Scene full = build_scene(syn.image, cfg);
  GraphParams gp{cfg.gamma, 1.0, 4.0, 0.5};
  const MultiscaleGraph pruned = assemble_graph(full.partitions, full.sim_features, gp);
  CHECK(pruned.interscale_edges.size() == full.graph.interscale_edges.size());
  CHECK(pruned.intrascale_edges.size() <= full.graph.intrascale_edges.size());
  for (const auto& e : pruned.intrascale_edges) CHECK(e.weight >= 0.5);
  CHECK(validate_graph(pruned, 4.0).empty());
}

TEST_CASE("graph CSV export") {
  const Image img = testutil::noise_image(12, 12, 2);
  const std::vector<int> mss = {10, 40};
  const auto parts = multiscale_partition(img, {0.4, 0.8}, mss);
  const FeatureImage sim = pixel_features(img, FeatureKind::kSimilarity);
  std::vector<FeatureMatrix> feats;
  for (const auto& p : parts) feats.push_back(superpixel_stats(p, sim, FeatureKind::kSimilarity));
  const MultiscaleGraph g = assemble_graph(parts, feats, {});
  const std::string dir = testutil::temp_dir("graph");
  write_graph_csv(dir + "/g.csv", g);
  std::ifstream in(dir + "/g.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "node_a_scale,node_a_id,node_b_scale,node_b_id,weight,kind");
  size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK((line.ends_with(",intra") || line.ends_with(",inter")));
  }
  CHECK(rows == g.intrascale_edges.size() + g.interscale_edges.size());
}
