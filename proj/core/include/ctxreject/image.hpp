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
#include <string>
#include <vector>

namespace ctxreject {

/// Row-major multi-channel raster of doubles. Pixel (x, y) has linear index
/// y * width + x and its channels are stored contiguously.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  int area() const { return width_ * height_; }

  double& at(int pixel, int c) { return data_[static_cast<size_t>(pixel) * channels_ + c]; }
  double at(int pixel, int c) const { return data_[static_cast<size_t>(pixel) * channels_ + c]; }
  double& at(int x, int y, int c) { return at(y * width_ + x, c); }
  double at(int x, int y, int c) const { return at(y * width_ + x, c); }

  const double* pixel(int p) const { return data_.data() + static_cast<size_t>(p) * channels_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// RGB image with intensities in [0, 1].
class Image : public Raster {
 public:
  Image() = default;
  Image(int width, int height) : Raster(width, height, 3) {}
};

/// Per-pixel integer labels; 0 is "unlabeled", 1..N are classes.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
};

/// 8-bit RGB buffer used for rendered outputs.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  ///< interleaved RGB
};

/// Reads PNG (gray, gray+alpha, RGB, RGBA; 8 or 16 bit) or binary PPM/PGM.
/// Gray inputs are replicated to three channels. Throws DataError.
Image read_image(const std::string& path);

/// Reads a ground-truth or class map from a PNG/PGM whose gray value (or
/// red channel) is the class label.
LabelMap read_label_map(const std::string& path);

void write_png(const std::string& path, const Rgb8Image& img);
void write_ppm(const std::string& path, const Image& img);
void write_label_map_png(const std::string& path, const LabelMap& map);

Rgb8Image to_rgb8(const Image& img);

}  // namespace ctxreject
