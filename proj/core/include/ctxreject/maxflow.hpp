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

#include <cstdint>
#include <vector>

namespace ctxreject {

/// Directed max-flow / min-cut on a capacitated graph, solved with the
/// augmenting-path scheme that grows and reuses a search tree from each
/// terminal. Capacities must be finite and nonnegative. Node ids are
/// 0..num_nodes-1; the terminals are ordinary node ids.
class MaxFlow {
 public:
  explicit MaxFlow(int num_nodes);

  int num_nodes() const { return static_cast<int>(first_arc_.size()); }

  /// Adds an arc u -> v with capacity `cap` and a reverse arc v -> u with
  /// capacity `rev_cap`.
  void add_edge(int u, int v, double cap, double rev_cap = 0.0);

  /// Computes a maximum flow from source to sink. May be called once.
  double solve(int source, int sink);

  /// After solve(): nodes reachable from the source in the residual graph.
  /// This is the source side of a minimum cut.
  const std::vector<bool>& source_side() const { return source_side_; }

  /// Capacity of the cut (source_side, rest), measured on original
  /// capacities.
  double cut_capacity() const;

  /// Net flow on arc index `arc` (as returned in insertion order, two arcs
  /// per add_edge call: forward = 2k, reverse = 2k + 1).
  double arc_flow(int arc) const { return original_cap_[arc] - residual_[arc]; }
  int arc_head(int arc) const { return head_[arc]; }
  int arc_tail(int arc) const { return head_[arc ^ 1]; }
  int num_arcs() const { return static_cast<int>(head_.size()); }

 private:
  enum : std::int8_t { kFree = 0, kSourceTree = 1, kSinkTree = 2 };

  void compute_source_side();

  std::vector<int> first_arc_;
  std::vector<int> next_arc_;
  std::vector<int> head_;
  std::vector<double> residual_;
  std::vector<double> original_cap_;
  std::vector<bool> source_side_;
  int source_ = -1;
  int sink_ = -1;
};

}  // namespace ctxreject
