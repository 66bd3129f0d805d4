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

#include "ctxreject/features.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>

#include "ctxreject/errors.hpp"

namespace ctxreject {
namespace {

FeatureImage rgb_features(const Image& img) { return static_cast<const Raster&>(img); }

struct Registry {
  std::mutex mu;
  std::map<std::string, FeaturePlugin> plugins{{"rgb", rgb_features}};
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_feature_plugin(const std::string& name, FeaturePlugin plugin) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.plugins[name] = std::move(plugin);
}

bool has_feature_plugin(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  return r.plugins.count(name) > 0;
}

FeatureImage pixel_features(const Image& img, FeatureKind kind, const std::string& plugin) {
  if (kind == FeatureKind::kSimilarity) return rgb_features(img);
  FeaturePlugin fn;
  {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    const auto it = r.plugins.find(plugin);
    if (it == r.plugins.end()) throw ConfigError("unknown feature plugin '" + plugin + "'");
    fn = it->second;
  }
  FeatureImage out = fn(img);
  if (out.width() != img.width() || out.height() != img.height())
    throw DataError("feature plugin '" + plugin + "' changed the image size");
  return out;
}

FeatureMatrix superpixel_stats(const Partition& part, const FeatureImage& feat, FeatureKind kind) {
  if (feat.width() != part.width || feat.height() != part.height)
    throw DataError("feature image and partition sizes differ");
  FeatureMatrix fm;
  fm.kind = kind;
  fm.rows = Eigen::MatrixXd::Zero(part.num_superpixels, feat.channels());
  std::vector<int> count(part.num_superpixels, 0);
  for (int p = 0; p < feat.area(); ++p) {
    const int id = part.assignment[p];
    ++count[id];
    for (int c = 0; c < feat.channels(); ++c) fm.rows(id, c) += feat.at(p, c);
  }
  for (int i = 0; i < part.num_superpixels; ++i) {
    if (count[i] == 0) throw DataError("empty superpixel " + std::to_string(i));
    fm.rows.row(i) /= count[i];
  }
  if (!fm.rows.allFinite()) throw DataError("non-finite superpixel features");
  return fm;
}

std::vector<int> majority_label(const Partition& part, const LabelMap& truth) {
  if (truth.width != part.width || truth.height != part.height)
    throw DataError("ground truth and partition sizes differ");
  std::vector<std::map<int, int>> votes(part.num_superpixels);
  for (size_t p = 0; p < part.assignment.size(); ++p) {
    const int l = truth.labels[p];
    if (l > 0) ++votes[part.assignment[p]][l];
  }
  std::vector<int> out(part.num_superpixels, kUnlabeled);
  for (int i = 0; i < part.num_superpixels; ++i) {
    int best = 0, best_count = 0;
    // Ascending label order, strict comparison: ties keep the smaller label.
    for (const auto& [label, count] : votes[i]) {
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    }
    if (best_count > 0) out[i] = best - 1;
  }
  return out;
}

void write_feature_matrix_csv(const std::string& path, const FeatureMatrix& fm) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "superpixel_id";
  for (int c = 0; c < fm.dim(); ++c) out << ",f_" << (c + 1);
  out << '\n' << std::setprecision(17);
  for (int i = 0; i < fm.num_rows(); ++i) {
    out << i;
    for (int c = 0; c < fm.dim(); ++c) out << ',' << fm.rows(i, c);
    out << '\n';
  }
}

}  // namespace ctxreject
