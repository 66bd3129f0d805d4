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

#include "ctxreject/msgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>

#include "ctxreject/errors.hpp"

namespace ctxreject {

std::vector<GraphEdge> MultiscaleGraph::all_edges() const {
  std::vector<GraphEdge> out = intrascale_edges;
  out.insert(out.end(), interscale_edges.begin(), interscale_edges.end());
  return out;
}

std::vector<std::pair<int, int>> build_intrascale_edges(const Partition& part) {
  std::vector<std::pair<int, int>> pairs;
  const int w = part.width, h = part.height;
  auto add = [&](int a, int b) {
    if (a != b) pairs.emplace_back(std::min(a, b), std::max(a, b));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = y * w + x;
      if (x + 1 < w) add(part.assignment[p], part.assignment[p + 1]);
      if (y + 1 < h) add(part.assignment[p], part.assignment[p + w]);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

std::vector<int> build_interscale_edges(const Partition& fine, const Partition& coarse) {
  if (fine.width != coarse.width || fine.height != coarse.height)
    throw DataError("partitions cover different pixel grids");
  std::vector<std::map<int, int>> overlap(fine.num_superpixels);
  for (size_t p = 0; p < fine.assignment.size(); ++p)
    ++overlap[fine.assignment[p]][coarse.assignment[p]];
  std::vector<int> parent(fine.num_superpixels, -1);
  for (int i = 0; i < fine.num_superpixels; ++i) {
    int best_count = 0;
    for (const auto& [coarse_id, count] : overlap[i]) {
      if (count > best_count) {
        best_count = count;
        parent[i] = coarse_id;
      }
    }
  }
  return parent;
}

double edge_weight(const Eigen::Ref<const Eigen::VectorXd>& fi,
                   const Eigen::Ref<const Eigen::VectorXd>& fj, bool same_scale, double gamma,
                   double v_intra, double v_inter) {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
  const double d2 = (fi - fj).squaredNorm();
  return (same_scale ? v_intra : v_inter) * std::exp(-d2 / gamma);
}

MultiscaleGraph assemble_graph(const std::vector<Partition>& parts,
                               const std::vector<FeatureMatrix>& sim_feats,
                               const GraphParams& params) {
  if (parts.empty()) throw DataError("no partitions");
  if (parts.size() != sim_feats.size())
    throw DataError("one similarity feature matrix per partition is required");
  MultiscaleGraph g;
  g.scale_offset.push_back(0);
  for (size_t s = 0; s < parts.size(); ++s) {
    if (sim_feats[s].num_rows() != parts[s].num_superpixels)
      throw DataError("feature rows do not match superpixel count at scale " +
                      std::to_string(s + 1));
    if (sim_feats[s].dim() != sim_feats[0].dim())
      throw DataError("similarity feature dimension differs between scales");
    g.scale_offset.push_back(g.scale_offset.back() + parts[s].num_superpixels);
    for (int i = 0; i < parts[s].num_superpixels; ++i) {
      g.node_scale.push_back(static_cast<int>(s) + 1);
      g.node_local.push_back(i);
    }
  }
  for (size_t s = 0; s < parts.size(); ++s) {
    const int scale = static_cast<int>(s) + 1;
    const auto& f = sim_feats[s].rows;
    for (const auto& [i, j] : build_intrascale_edges(parts[s])) {
      const double w = edge_weight(f.row(i).transpose(), f.row(j).transpose(), true, params.gamma,
                                   params.v_intrascale, params.v_interscale);
      if (w < params.prune_min_weight) continue;
      g.intrascale_edges.push_back({g.node(scale, i), g.node(scale, j), w, EdgeKind::kIntrascale});
    }
  }
  for (size_t s = 0; s + 1 < parts.size(); ++s) {
    const int scale = static_cast<int>(s) + 1;
    const auto parent = build_interscale_edges(parts[s], parts[s + 1]);
    const auto& ff = sim_feats[s].rows;
    const auto& fc = sim_feats[s + 1].rows;
    for (int i = 0; i < static_cast<int>(parent.size()); ++i) {
      const double w = edge_weight(ff.row(i).transpose(), fc.row(parent[i]).transpose(), false,
                                   params.gamma, params.v_intrascale, params.v_interscale);
      g.interscale_edges.push_back(
          {g.node(scale, i), g.node(scale + 1, parent[i]), w, EdgeKind::kInterscale});
    }
  }
  return g;
}

std::vector<std::string> validate_graph(const MultiscaleGraph& graph, double max_weight) {
  std::vector<std::string> problems;
  const int n = graph.num_nodes();
  const int top = graph.num_scales();
  std::vector<int> up(n, 0), down(n, 0);
  std::set<std::pair<int, int>> seen;
  auto check_edge = [&](const GraphEdge& e) {
    if (e.a < 0 || e.b >= n || e.a >= e.b) {
      problems.push_back("edge endpoints out of order or range");
      return false;
    }
    if (!seen.emplace(e.a, e.b).second)
      problems.push_back("duplicate edge " + std::to_string(e.a) + "-" + std::to_string(e.b));
    if (!std::isfinite(e.weight) || e.weight < 0.0 || e.weight > max_weight)
      problems.push_back("edge weight out of bounds");
    return true;
  };
  for (const auto& e : graph.intrascale_edges) {
    if (!check_edge(e)) continue;
    if (graph.node_scale[e.a] != graph.node_scale[e.b])
      problems.push_back("intrascale edge joins different scales");
  }
  for (const auto& e : graph.interscale_edges) {
    if (!check_edge(e)) continue;
    if (graph.node_scale[e.b] != graph.node_scale[e.a] + 1) {
      problems.push_back("interscale edge does not join adjacent scales");
      continue;
    }
    ++up[e.a];
    ++down[e.b];
  }
  for (int v = 0; v < n; ++v) {
    const int s = graph.node_scale[v];
    if (s < top && up[v] != 1)
      problems.push_back("node " + std::to_string(v) + " has " + std::to_string(up[v]) +
                         " upward edges");
    if (s == top && up[v] != 0) problems.push_back("top-scale node with an upward edge");
    if (s > 1 && down[v] < 1)
      problems.push_back("node " + std::to_string(v) + " has no downward edge");
  }
  return problems;
}

void write_graph_csv(const std::string& path, const MultiscaleGraph& graph) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "node_a_scale,node_a_id,node_b_scale,node_b_id,weight,kind\n" << std::setprecision(17);
  for (const auto& e : graph.all_edges()) {
    out << graph.node_scale[e.a] << ',' << graph.node_local[e.a] << ',' << graph.node_scale[e.b]
        << ',' << graph.node_local[e.b] << ',' << e.weight << ','
        << (e.kind == EdgeKind::kIntrascale ? "intra" : "inter") << '\n';
  }
}

}  // namespace ctxreject
