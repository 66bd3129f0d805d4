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

#include "ctxreject/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

#include "ctxreject/errors.hpp"

namespace ctxreject {

std::vector<int> Partition::sizes() const {
  std::vector<int> out(num_superpixels, 0);
  for (int id : assignment) ++out[id];
  return out;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  /// Attaches the smaller tree below the larger; returns the new root.
  int join(int a, int b) {
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }
  int size(int root) const { return size_[root]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(sigma * 4.0)) + 1;
  std::vector<double> k(radius);
  for (int i = 0; i < radius; ++i) k[i] = std::exp(-0.5 * (i / sigma) * (i / sigma));
  // Normalize as a symmetric kernel: k[0] + 2 * sum(k[1..]).
  double sum = k[0];
  for (int i = 1; i < radius; ++i) sum += 2.0 * k[i];
  for (double& v : k) v /= sum;
  return k;
}

Image smooth(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size());
  const int w = img.width(), h = img.height();
  Image tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = k[0] * img.at(x, y, c);
        for (int i = 1; i < r; ++i) {
          acc += k[i] * (img.at(std::max(x - i, 0), y, c) + img.at(std::min(x + i, w - 1), y, c));
        }
        tmp.at(x, y, c) = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = k[0] * tmp.at(x, y, c);
        for (int i = 1; i < r; ++i) {
          acc += k[i] * (tmp.at(x, std::max(y - i, 0), c) + tmp.at(x, std::min(y + i, h - 1), c));
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

struct GridEdge {
  int a;
  int b;
  double w;
};

std::vector<GridEdge> grid_edges(const Image& img) {
  const int w = img.width(), h = img.height();
  std::vector<GridEdge> edges;
  edges.reserve(static_cast<size_t>(w) * h * 2);
  auto dist = [&](int p, int q) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = img.at(p, c) - img.at(q, c);
      s += d * d;
    }
    return std::sqrt(s);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = y * w + x;
      if (x + 1 < w) edges.push_back({p, p + 1, dist(p, p + 1)});
      if (y + 1 < h) edges.push_back({p, p + w, dist(p, p + w)});
    }
  }
  return edges;
}

/// Region adjacency state for the minimum-size pass. Regions are merged
/// in increasing (size, key) order where key is the smallest pixel index
/// of the region, which is also the order of the final superpixel ids.
class RegionMerger {
 public:
  RegionMerger(const Image& img, const std::vector<int>& component_of_pixel, int num_components)
      : pixel_region_(component_of_pixel),
        sets_(num_components),
        size_(num_components, 0),
        key_(num_components, img.area()),
        sum_(static_cast<size_t>(num_components) * 3, 0.0),
        neighbors_(num_components),
        alive_(num_components) {
    for (int p = 0; p < img.area(); ++p) {
      const int r = pixel_region_[p];
      ++size_[r];
      key_[r] = std::min(key_[r], p);
      for (int c = 0; c < 3; ++c) sum_[3 * r + c] += img.at(p, c);
    }
    const int w = img.width(), h = img.height();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int p = y * w + x;
        const int r = pixel_region_[p];
        if (x + 1 < w && pixel_region_[p + 1] != r) link(r, pixel_region_[p + 1]);
        if (y + 1 < h && pixel_region_[p + w] != r) link(r, pixel_region_[p + w]);
      }
    }
  }

  void enforce_min_size(int mss) {
    using Entry = std::tuple<int, int, int>;  // size, key, region
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (int r = 0; r < static_cast<int>(size_.size()); ++r) {
      if (sets_.find(r) == r && size_[r] < mss) heap.emplace(size_[r], key_[r], r);
    }
    while (!heap.empty() && alive_ > 1) {
      const auto [sz, key, r] = heap.top();
      heap.pop();
      if (sets_.find(r) != r || size_[r] != sz || key_[r] != key || sz >= mss) continue;
      const int target = most_similar_neighbor(r);
      const int merged = merge(r, target);
      if (size_[merged] < mss) heap.emplace(size_[merged], key_[merged], merged);
    }
  }

  Partition snapshot(int width, int height, int scale_index) {
    std::vector<std::pair<int, int>> roots;  // key, region
    for (int r = 0; r < static_cast<int>(size_.size()); ++r) {
      if (sets_.find(r) == r) roots.emplace_back(key_[r], r);
    }
    std::sort(roots.begin(), roots.end());
    std::vector<int> id_of(size_.size(), -1);
    for (int i = 0; i < static_cast<int>(roots.size()); ++i) id_of[roots[i].second] = i;
    Partition part;
    part.scale_index = scale_index;
    part.width = width;
    part.height = height;
    part.num_superpixels = static_cast<int>(roots.size());
    part.assignment.resize(pixel_region_.size());
    for (size_t p = 0; p < pixel_region_.size(); ++p)
      part.assignment[p] = id_of[sets_.find(pixel_region_[p])];
    return part;
  }

 private:
  void link(int a, int b) {
    neighbors_[a].insert(b);
    neighbors_[b].insert(a);
  }

  double mean_distance2(int a, int b) const {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = sum_[3 * a + c] / size_[a] - sum_[3 * b + c] / size_[b];
      s += d * d;
    }
    return s;
  }

  int most_similar_neighbor(int r) const {
    int best = -1;
    double best_d = 0.0;
    for (int q : neighbors_[r]) {
      const double d = mean_distance2(r, q);
      if (best < 0 || d < best_d || (d == best_d && key_[q] < key_[best])) {
        best = q;
        best_d = d;
      }
    }
    return best;
  }

  int merge(int a, int b) {
    const int root = sets_.join(a, b);
    const int gone = root == a ? b : a;
    size_[root] = size_[a] + size_[b];
    key_[root] = std::min(key_[a], key_[b]);
    for (int c = 0; c < 3; ++c) sum_[3 * root + c] = sum_[3 * a + c] + sum_[3 * b + c];
    neighbors_[root].erase(gone);
    for (int q : neighbors_[gone]) {
      if (q == root) continue;
      neighbors_[q].erase(gone);
      neighbors_[q].insert(root);
      neighbors_[root].insert(q);
    }
    neighbors_[gone].clear();
    --alive_;
    return root;
  }

  std::vector<int> pixel_region_;
  DisjointSets sets_;
  std::vector<int> size_;
  std::vector<int> key_;
  std::vector<double> sum_;
  std::vector<std::set<int>> neighbors_;
  int alive_;
};

/// Graph-merging stage: returns per-pixel component ids 0..count-1.
std::vector<int> felzenszwalb_components(const Image& img, const SegmentationParams& params,
                                         int* count) {
  const Image smoothed = smooth(img, params.sigma);
  auto edges = grid_edges(smoothed);
  std::stable_sort(edges.begin(), edges.end(),
                   [](const GridEdge& x, const GridEdge& y) { return x.w < y.w; });
  const int n = img.area();
  DisjointSets sets(n);
  std::vector<double> threshold(n, params.k);
  for (const auto& e : edges) {
    const int a = sets.find(e.a);
    const int b = sets.find(e.b);
    if (a == b) continue;
    if (e.w <= threshold[a] && e.w <= threshold[b]) {
      const int root = sets.join(a, b);
      threshold[root] = e.w + params.k / sets.size(root);
    }
  }
  std::vector<int> comp(n), id_of(n, -1);
  int next = 0;
  for (int p = 0; p < n; ++p) {
    const int r = sets.find(p);
    if (id_of[r] < 0) id_of[r] = next++;
    comp[p] = id_of[r];
  }
  *count = next;
  return comp;
}

}  // namespace

std::vector<Partition> multiscale_partition(const Image& img, const SegmentationParams& params,
                                            std::span<const int> mss_list) {
  if (mss_list.empty()) throw ConfigError("mss_list is empty");
  for (size_t i = 0; i < mss_list.size(); ++i) {
    if (mss_list[i] < 1) throw ConfigError("mss must be >= 1");
    if (i > 0 && mss_list[i] <= mss_list[i - 1]) throw ConfigError("mss_list not increasing");
  }
  if (img.area() < 1) throw DataError("empty image");
  int count = 0;
  const auto comp = felzenszwalb_components(img, params, &count);
  RegionMerger merger(img, comp, count);
  std::vector<Partition> out;
  out.reserve(mss_list.size());
  for (size_t s = 0; s < mss_list.size(); ++s) {
    merger.enforce_min_size(mss_list[s]);
    out.push_back(merger.snapshot(img.width(), img.height(), static_cast<int>(s) + 1));
  }
  return out;
}

Partition oversegment(const Image& img, const SegmentationParams& params, int mss) {
  const int list[] = {mss};
  return std::move(multiscale_partition(img, params, list).front());
}

std::vector<std::string> validate_partition(const Partition& part, int mss) {
  std::vector<std::string> problems;
  const int area = part.width * part.height;
  if (static_cast<int>(part.assignment.size()) != area) {
    problems.push_back("assignment size does not match image area");
    return problems;
  }
  std::vector<int> sizes(part.num_superpixels, 0);
  for (int id : part.assignment) {
    if (id < 0 || id >= part.num_superpixels) {
      problems.push_back("superpixel id out of range");
      return problems;
    }
    ++sizes[id];
  }
  for (int i = 0; i < part.num_superpixels; ++i) {
    if (sizes[i] == 0) problems.push_back("superpixel " + std::to_string(i) + " is empty");
    if (area >= mss && sizes[i] < mss)
      problems.push_back("superpixel " + std::to_string(i) + " below minimum size");
  }
  // Connectivity: BFS from the first pixel of every superpixel must reach
  // all of its pixels.
  std::vector<char> seen(area, 0);
  std::vector<char> started(part.num_superpixels, 0);
  for (int p = 0; p < area; ++p) {
    const int id = part.assignment[p];
    if (started[id]) {
      if (!seen[p]) problems.push_back("superpixel " + std::to_string(id) + " is not connected");
      continue;
    }
    started[id] = 1;
    std::queue<int> q;
    q.push(p);
    seen[p] = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      const int x = u % part.width, y = u / part.width;
      const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& nb : nbr) {
        if (nb[0] < 0 || nb[1] < 0 || nb[0] >= part.width || nb[1] >= part.height) continue;
        const int v = nb[1] * part.width + nb[0];
        if (!seen[v] && part.assignment[v] == id) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
  }
  return problems;
}

void write_partition(const std::string& png_path, const std::string& csv_path,
                     const Partition& part) {
  Rgb8Image img{part.width, part.height, std::vector<std::uint8_t>(part.assignment.size() * 3)};
  for (size_t p = 0; p < part.assignment.size(); ++p) {
    const auto id = static_cast<std::uint32_t>(part.assignment[p]);
    img.data[3 * p] = static_cast<std::uint8_t>((id >> 16) & 0xff);
    img.data[3 * p + 1] = static_cast<std::uint8_t>((id >> 8) & 0xff);
    img.data[3 * p + 2] = static_cast<std::uint8_t>(id & 0xff);
  }
  write_png(png_path, img);
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write '" + csv_path + "'");
  csv << "pixel_index,superpixel_id\n";
  for (size_t p = 0; p < part.assignment.size(); ++p) csv << p << ',' << part.assignment[p] << '\n';
}

}  // namespace ctxreject
