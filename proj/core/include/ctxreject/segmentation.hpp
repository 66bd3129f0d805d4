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

#include <span>
#include <vector>

#include "ctxreject/image.hpp"

namespace ctxreject {

/// Assignment of every pixel to one superpixel at one scale.
struct Partition {
  int scale_index = 1;  ///< 1-based; larger means coarser
  int width = 0;
  int height = 0;
  int num_superpixels = 0;
  std::vector<int> assignment;  ///< per-pixel id in 0..num_superpixels-1

  std::vector<int> sizes() const;
};

struct SegmentationParams {
  double k = 300.0 / 255.0;  ///< merge threshold constant
  double sigma = 0.8;        ///< Gaussian pre-smoothing; 0 disables
};

/// Graph-based oversegmentation on the 4-connected grid followed by a
/// minimum-size pass that merges every superpixel smaller than `mss` into
/// its most similar neighbour. Deterministic.
Partition oversegment(const Image& img, const SegmentationParams& params, int mss);

/// One partition per entry of `mss_list` (which must be strictly
/// increasing). Coarser scales continue the size-enforcement merges of the
/// finer ones, so every scale is identical to a standalone oversegment()
/// call and the partitions are nested.
std::vector<Partition> multiscale_partition(const Image& img, const SegmentationParams& params,
                                            std::span<const int> mss_list);

/// Structural checks: contiguous ids, 4-connected superpixels, size floor.
/// Returns a list of human-readable problems, empty when valid.
std::vector<std::string> validate_partition(const Partition& part, int mss);

/// Exports the partition as an id-encoded PNG (id = R<<16 | G<<8 | B) and
/// a CSV sidecar of (pixel_index, superpixel_id).
void write_partition(const std::string& png_path, const std::string& csv_path,
                     const Partition& part);

}  // namespace ctxreject
