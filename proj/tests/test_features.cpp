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
#include <random>

#include "ctxreject/errors.hpp"
#include "ctxreject/features.hpp"
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

}  // namespace

TEST_CASE("rgb features are the pixel values") {
  Image img(2, 1);
  img.at(0, 0) = 1.0;
  img.at(1, 1) = 0.25;
  const FeatureImage f = pixel_features(img, FeatureKind::kApplication);
  CHECK(f.channels() == 3);
  CHECK(f.at(0, 0) == 1.0);
  CHECK(f.at(0, 1) == 0.0);
  CHECK(f.at(0, 2) == 0.0);
  CHECK(f.at(1, 1) == 0.25);
  CHECK(pixel_features(img, FeatureKind::kSimilarity).channels() == 3);
}

TEST_CASE("feature plugins of any dimension") {
  register_feature_plugin("ten", [](const Image& img) {
    FeatureImage f(img.width(), img.height(), 10);
    for (int p = 0; p < img.area(); ++p)
      for (int c = 0; c < 10; ++c) f.at(p, c) = img.at(p, c % 3) * (c + 1);
    return f;
  });
  CHECK(has_feature_plugin("ten"));
  const Image img = testutil::noise_image(6, 4, 1);
  const FeatureImage app = pixel_features(img, FeatureKind::kApplication, "ten");
  CHECK(app.channels() == 10);
  // Similarity features ignore the plugin.
  CHECK(pixel_features(img, FeatureKind::kSimilarity, "ten").channels() == 3);
  const Partition p = manual_partition(6, 4, std::vector<int>(24, 0));
  const FeatureMatrix fm = superpixel_stats(p, app);
  CHECK(fm.dim() == 10);
  CHECK(fm.num_rows() == 1);
  CHECK_THROWS_AS(pixel_features(img, FeatureKind::kApplication, "missing"), ConfigError);
}

TEST_CASE("mean of two pixels") {
  Image img(2, 1);
  for (int c = 0; c < 3; ++c) img.at(1, c) = 1.0;
  const FeatureMatrix fm =
      superpixel_stats(manual_partition(2, 1, {0, 0}), pixel_features(img, FeatureKind::kSimilarity));
  for (int c = 0; c < 3; ++c) CHECK(fm.rows(0, c) == doctest::Approx(0.5));
}

TEST_CASE("constant superpixel keeps its colour") {
  const Image img = testutil::constant_image(3, 3, 0.1, 0.2, 0.3);
  const FeatureMatrix fm = superpixel_stats(manual_partition(3, 3, std::vector<int>(9, 0)),
                                            pixel_features(img, FeatureKind::kSimilarity));
  CHECK(fm.rows(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(fm.rows(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(fm.rows(0, 2) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("random superpixel means match direct summation, permutation and hull bounds") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Image img = testutil::noise_image(5, 4, t);
    std::vector<int> a(20);
    for (auto& v : a) v = static_cast<int>(rng() % 4);
    for (int id = 0; id < 4; ++id) a[id] = id;  // every id present
    const Partition p = manual_partition(5, 4, a);
    const FeatureImage f = pixel_features(img, FeatureKind::kSimilarity);
    const FeatureMatrix fm = superpixel_stats(p, f);
    for (int id = 0; id < 4; ++id) {
      std::vector<int> members;
      for (int i = 0; i < 20; ++i)
        if (a[i] == id) members.push_back(i);
      for (int c = 0; c < 3; ++c) {
        double s = 0, lo = 1, hi = 0;
        for (int i : members) {
          s += img.at(i, c);
          lo = std::min(lo, img.at(i, c));
          hi = std::max(hi, img.at(i, c));
        }
        CHECK(fm.rows(id, c) == doctest::Approx(s / members.size()).epsilon(1e-12));
        CHECK(fm.rows(id, c) >= lo - 1e-15);
        CHECK(fm.rows(id, c) <= hi + 1e-15);
      }
    }
    // Permuting pixel values inside superpixel 0 leaves its mean unchanged.
    Image perm = img;
    std::vector<int> m0;
    for (int i = 0; i < 20; ++i)
      if (a[i] == 0) m0.push_back(i);
    std::vector<int> shuffled = m0;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (size_t k = 0; k < m0.size(); ++k)
      for (int c = 0; c < 3; ++c) perm.at(shuffled[k], c) = img.at(m0[k], c);
    const FeatureMatrix fp = superpixel_stats(p, pixel_features(perm, FeatureKind::kSimilarity));
    for (int c = 0; c < 3; ++c) CHECK(fp.rows(0, c) == doctest::Approx(fm.rows(0, c)).epsilon(1e-12));
  }
}

TEST_CASE("majority labels with ties and unlabeled pixels") {
  const Partition p = manual_partition(7, 1, {0, 0, 0, 1, 1, 2, 2});
  LabelMap truth{7, 1, {1, 1, 2, 1, 2, 0, 0}};
  const auto m = majority_label(p, truth);
  CHECK(m[0] == 0);           // {1,1,2} -> class 1
  CHECK(m[1] == 0);           // {1,2} tie -> smaller
  CHECK(m[2] == kUnlabeled);  // all unlabeled
}

TEST_CASE("unlabeled pixels do not vote") {
  const Partition p = manual_partition(4, 1, {0, 0, 0, 0});
  LabelMap truth{4, 1, {0, 0, 0, 3}};
  CHECK(majority_label(p, truth)[0] == 2);
}
