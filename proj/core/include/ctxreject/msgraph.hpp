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

#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "ctxreject/features.hpp"
#include "ctxreject/segmentation.hpp"

namespace ctxreject {

enum class EdgeKind { kIntrascale, kInterscale };

struct GraphEdge {
  int a = 0;  ///< global node index, a < b
  int b = 0;
  double weight = 0.0;
  EdgeKind kind = EdgeKind::kIntrascale;
};

/// Nodes are the superpixels of every scale; node (s, i) has global index
/// scale_offset[s - 1] + i.
struct MultiscaleGraph {
  std::vector<int> scale_offset;  ///< size S + 1, last entry = node count
  std::vector<int> node_scale;    ///< 1-based scale of each node
  std::vector<int> node_local;    ///< superpixel id within its scale
  std::vector<GraphEdge> intrascale_edges;
  std::vector<GraphEdge> interscale_edges;

  int num_nodes() const { return scale_offset.empty() ? 0 : scale_offset.back(); }
  int num_scales() const { return static_cast<int>(scale_offset.size()) - 1; }
  int node(int scale, int local) const { return scale_offset[scale - 1] + local; }
  int scale_size(int scale) const { return scale_offset[scale] - scale_offset[scale - 1]; }

  /// Intrascale followed by interscale edges.
  std::vector<GraphEdge> all_edges() const;
};

struct GraphParams {
  double gamma = 0.01;
  double v_intrascale = 1.0;
  double v_interscale = 4.0;
  double prune_min_weight = 0.0;  ///< intrascale edges below this are dropped
};

/// Sorted pairs (i, j), i < j, of superpixels with 4-adjacent pixels.
std::vector<std::pair<int, int>> build_intrascale_edges(const Partition& part);

/// For each fine superpixel, the coarse superpixel with the largest pixel
/// overlap (smaller id on ties). Entry i is the parent of fine node i.
std::vector<int> build_interscale_edges(const Partition& fine, const Partition& coarse);

/// v * exp(-|fi - fj|^2 / gamma) with v the intra- or interscale
/// multiplier.
double edge_weight(const Eigen::Ref<const Eigen::VectorXd>& fi,
                   const Eigen::Ref<const Eigen::VectorXd>& fj, bool same_scale,
                   double gamma, double v_intra, double v_inter);

/// Throws DataError when the partitions and feature matrices disagree.
MultiscaleGraph assemble_graph(const std::vector<Partition>& parts,
                               const std::vector<FeatureMatrix>& sim_feats,
                               const GraphParams& params);

/// Walks every edge and returns a list of structural problems (parent
/// uniqueness, child coverage, duplicates, weight bounds).
std::vector<std::string> validate_graph(const MultiscaleGraph& graph, double max_weight);

/// CSV: node_a_scale,node_a_id,node_b_scale,node_b_id,weight,kind
void write_graph_csv(const std::string& path, const MultiscaleGraph& graph);

}  // namespace ctxreject
