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

#include "ctxreject/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "ctxreject/errors.hpp"

namespace ctxreject {
namespace {
constexpr int kNone = -1;
constexpr int kOrphan = -2;
}  // namespace

MaxFlow::MaxFlow(int num_nodes) : first_arc_(num_nodes, kNone) {
  if (num_nodes < 2) throw DataError("a flow network needs at least two nodes");
}

void MaxFlow::add_edge(int u, int v, double cap, double rev_cap) {
  if (u < 0 || v < 0 || u >= num_nodes() || v >= num_nodes())
    throw DataError("flow edge endpoint out of range");
  if (!(cap >= 0.0) || !(rev_cap >= 0.0) || !std::isfinite(cap) || !std::isfinite(rev_cap))
    throw DataError("flow capacities must be finite and nonnegative");
  const int fwd = static_cast<int>(head_.size());
  head_.push_back(v);
  residual_.push_back(cap);
  original_cap_.push_back(cap);
  next_arc_.push_back(first_arc_[u]);
  first_arc_[u] = fwd;
  head_.push_back(u);
  residual_.push_back(rev_cap);
  original_cap_.push_back(rev_cap);
  next_arc_.push_back(first_arc_[v]);
  first_arc_[v] = fwd + 1;
}

double MaxFlow::solve(int source, int sink) {
  const int n = num_nodes();
  if (source < 0 || sink < 0 || source >= n || sink >= n || source == sink)
    throw DataError("invalid flow terminals");
  if (source_ >= 0) throw DataError("MaxFlow::solve may only be called once");
  source_ = source;
  sink_ = sink;

  // Arcs are visited in insertion order, so reverse the per-node lists that
  // add_edge built head-first.
  for (int u = 0; u < n; ++u) {
    int prev = kNone, a = first_arc_[u];
    while (a != kNone) {
      const int next = next_arc_[a];
      next_arc_[a] = prev;
      prev = a;
      a = next;
    }
    first_arc_[u] = prev;
  }

  std::vector<std::int8_t> tree(n, kFree);
  // S-tree: arc from parent into the node. T-tree: arc from the node to its
  // parent. Roots have kNone.
  std::vector<int> parent(n, kNone);
  std::vector<char> active(n, 0);
  std::deque<int> active_queue;
  std::deque<int> orphans;
  // Growth resumes from cur[v]; arcs before it led nowhere new. Any event
  // that could change that re-activates the node, which rewinds the scan.
  std::vector<int> cur(n, kNone);
  auto activate = [&](int v) {
    cur[v] = first_arc_[v];
    if (!active[v]) {
      active[v] = 1;
      active_queue.push_back(v);
    }
  };
  auto tail = [&](int arc) { return head_[arc ^ 1]; };
  auto parent_node = [&](int v) {
    return tree[v] == kSourceTree ? tail(parent[v]) : head_[parent[v]];
  };
  // Root distance of v, or -1 when its parent chain hits an orphan. Nodes
  // verified since the last augmentation carry the current timestamp, so
  // later walks stop there instead of climbing to the terminal.
  std::vector<int> stamp(n, 0), dist(n, 0);
  int now = 1;
  auto root_distance = [&](int v) {
    const int root = tree[v] == kSourceTree ? source : sink;
    int d = 0;
    int u = v;
    while (stamp[u] != now) {
      if (u == root) {
        stamp[u] = now;
        dist[u] = 0;
        break;
      }
      if (parent[u] < 0) return -1;
      u = parent_node(u);
      ++d;
    }
    d += dist[u];
    const int total = d;
    for (u = v; stamp[u] != now; u = parent_node(u)) {
      stamp[u] = now;
      dist[u] = d--;
    }
    return total;
  };

  tree[source] = kSourceTree;
  tree[sink] = kSinkTree;
  activate(source);
  activate(sink);
  double flow = 0.0;

  while (!active_queue.empty()) {
    const int p = active_queue.front();
    if (tree[p] == kFree) {
      active[p] = 0;
      active_queue.pop_front();
      continue;
    }
    // Growth: find an arc bridging the two trees.
    int bridge = kNone;
    for (; cur[p] != kNone; cur[p] = next_arc_[cur[p]]) {
      const int a = cur[p];
      const int q = head_[a];
      if (tree[p] == kSourceTree) {
        if (residual_[a] <= 0.0) continue;
        if (tree[q] == kFree) {
          tree[q] = kSourceTree;
          parent[q] = a;
          stamp[q] = stamp[p];
          dist[q] = dist[p] + 1;
          activate(q);
        } else if (tree[q] == kSinkTree) {
          bridge = a;
          break;
        }
      } else {
        if (residual_[a ^ 1] <= 0.0) continue;
        if (tree[q] == kFree) {
          tree[q] = kSinkTree;
          parent[q] = a ^ 1;
          stamp[q] = stamp[p];
          dist[q] = dist[p] + 1;
          activate(q);
        } else if (tree[q] == kSourceTree) {
          bridge = a ^ 1;
          break;
        }
      }
    }
    if (bridge == kNone) {
      active[p] = 0;
      active_queue.pop_front();
      continue;
    }

    // Augmentation along source ... tail(bridge) -> head(bridge) ... sink.
    double bottleneck = residual_[bridge];
    for (int v = tail(bridge); v != source; v = tail(parent[v]))
      bottleneck = std::min(bottleneck, residual_[parent[v]]);
    for (int v = head_[bridge]; v != sink; v = head_[parent[v]])
      bottleneck = std::min(bottleneck, residual_[parent[v]]);
    residual_[bridge] -= bottleneck;
    residual_[bridge ^ 1] += bottleneck;
    for (int v = tail(bridge); v != source;) {
      const int a = parent[v];
      const int up = tail(a);
      residual_[a] -= bottleneck;
      residual_[a ^ 1] += bottleneck;
      if (residual_[a] <= 0.0) {
        residual_[a] = 0.0;
        parent[v] = kOrphan;
        orphans.push_back(v);
      }
      v = up;
    }
    for (int v = head_[bridge]; v != sink;) {
      const int a = parent[v];
      const int up = head_[a];
      residual_[a] -= bottleneck;
      residual_[a ^ 1] += bottleneck;
      if (residual_[a] <= 0.0) {
        residual_[a] = 0.0;
        parent[v] = kOrphan;
        orphans.push_back(v);
      }
      v = up;
    }
    flow += bottleneck;
    ++now;

    // Adoption: reattach each orphan to the closest rooted neighbour.
    while (!orphans.empty()) {
      const int v = orphans.front();
      orphans.pop_front();
      const bool in_source = tree[v] == kSourceTree;
      int new_parent = kNone;
      int best = std::numeric_limits<int>::max();
      for (int a = first_arc_[v]; a != kNone; a = next_arc_[a]) {
        const int q = head_[a];
        if (tree[q] != tree[v]) continue;
        const int cand = in_source ? (a ^ 1) : a;
        if (residual_[cand] <= 0.0) continue;
        const int d = root_distance(q);
        if (d >= 0 && d < best) {
          best = d;
          new_parent = cand;
        }
      }
      if (new_parent != kNone) {
        parent[v] = new_parent;
        stamp[v] = now;
        dist[v] = best + 1;
        continue;
      }
      for (int a = first_arc_[v]; a != kNone; a = next_arc_[a]) {
        const int q = head_[a];
        if (tree[q] != tree[v]) continue;
        const int toward_v = in_source ? (a ^ 1) : a;
        if (residual_[toward_v] > 0.0) activate(q);
        if (parent[q] >= 0 && parent_node(q) == v) {
          parent[q] = kOrphan;
          orphans.push_back(q);
        }
      }
      tree[v] = kFree;
      parent[v] = kNone;
    }
  }
  compute_source_side();
  return flow;
}

void MaxFlow::compute_source_side() {
  source_side_.assign(num_nodes(), false);
  std::deque<int> queue{source_};
  source_side_[source_] = true;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int a = first_arc_[u]; a != kNone; a = next_arc_[a]) {
      const int v = head_[a];
      if (!source_side_[v] && residual_[a] > 0.0) {
        source_side_[v] = true;
        queue.push_back(v);
      }
    }
  }
}

double MaxFlow::cut_capacity() const {
  double total = 0.0;
  for (int a = 0; a < num_arcs(); ++a)
    if (source_side_[arc_tail(a)] && !source_side_[head_[a]]) total += original_cap_[a];
  return total;
}

}  // namespace ctxreject
