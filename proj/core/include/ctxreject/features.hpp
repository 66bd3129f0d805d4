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
#include <functional>
#include <string>
#include <vector>

#include "ctxreject/image.hpp"
#include "ctxreject/segmentation.hpp"

namespace ctxreject {

enum class FeatureKind { kApplication, kSimilarity };

/// m-channel per-pixel feature image.
using FeatureImage = Raster;

/// Per-superpixel feature statistics, one row per superpixel.
struct FeatureMatrix {
  FeatureKind kind = FeatureKind::kApplication;
  Eigen::MatrixXd rows;

  int num_rows() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
};

/// A named transform from an RGB image to an m-channel feature image.
using FeaturePlugin = std::function<FeatureImage(const Image&)>;

/// Registers (or replaces) a plugin. "rgb" is built in.
void register_feature_plugin(const std::string& name, FeaturePlugin plugin);
bool has_feature_plugin(const std::string& name);

/// Similarity features are always RGB. Application features come from the
/// named plugin. Throws ConfigError for an unknown plugin.
FeatureImage pixel_features(const Image& img, FeatureKind kind,
                            const std::string& plugin = "rgb");

/// Row i is the sample mean of the features of the pixels assigned to
/// superpixel i.
FeatureMatrix superpixel_stats(const Partition& part, const FeatureImage& feat,
                               FeatureKind kind = FeatureKind::kApplication);

inline constexpr int kUnlabeled = -1;

/// Modal ground-truth class per superpixel (ties go to the smaller class);
/// `truth` holds 0 for unlabeled pixels and 1..N otherwise. Returns
/// zero-based classes, kUnlabeled for superpixels without labeled pixels.
std::vector<int> majority_label(const Partition& part, const LabelMap& truth);

void write_feature_matrix_csv(const std::string& path, const FeatureMatrix& fm);

}  // namespace ctxreject
