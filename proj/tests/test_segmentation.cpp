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

#include <cmath>
#include <fstream>
#include <set>

#include "ctxreject/errors.hpp"
#include "ctxreject/segmentation.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ctxreject;

TEST_CASE("two flat halves split into exactly the halves") {
  Image img(16, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = x < 8 ? 0.0 : 1.0;
  const Partition p = oversegment(img, {300.0 / 255.0, 0.0}, 4);
  // Oracle: connected components of the noiseless colour map.
  std::vector<int> colour(img.area());
  for (int i = 0; i < img.area(); ++i) colour[i] = img.at(i, 0) > 0.5;
  CHECK(testutil::count_components(16, 10, colour) == 2);
  REQUIRE(p.num_superpixels == 2);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 16; ++x) CHECK(p.assignment[y * 16 + x] == (x < 8 ? 0 : 1));
}

TEST_CASE("constant image is bounded by the size floor") {
  const Image img = testutil::constant_image(23, 17, 0.3, 0.3, 0.3);
  for (double k : {0.01, 1.0, 100.0})
    for (int mss : {1, 10, 50, 391}) {
      const Partition p = oversegment(img, {k, 0.8}, mss);
      CHECK(p.num_superpixels <= static_cast<int>(std::ceil(23.0 * 17.0 / mss)));
      CHECK(validate_partition(p, mss).empty());
    }
}

TEST_CASE("single pixel image") {
  const Image img = testutil::constant_image(1, 1, 0.2, 0.4, 0.6);
  const Partition p = oversegment(img, {}, 5);
  CHECK(p.num_superpixels == 1);
  CHECK(p.assignment == std::vector<int>{0});
}

TEST_CASE("size floor larger than the image gives one superpixel") {
  const Image img = testutil::noise_image(12, 9, 3);
  const Partition p = oversegment(img, {}, 1000);
  CHECK(p.num_superpixels == 1);
}

TEST_CASE("partitions of noisy images are valid and deterministic") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image img = testutil::noise_image(40, 30, seed);
    for (int mss : {1, 8, 30}) {
      const Partition a = oversegment(img, {0.5, 0.8}, mss);
      const Partition b = oversegment(img, {0.5, 0.8}, mss);
      CHECK(a.assignment == b.assignment);
      CHECK(validate_partition(a, mss).empty());
      // Connectivity cross-check: each id is one 4-connected component.
      CHECK(testutil::count_components(40, 30, a.assignment) == a.num_superpixels);
    }
  }
}

TEST_CASE("multiscale partitions are nested, ordered and match standalone calls") {
  const Image img = testutil::noise_image(48, 40, 11);
  const std::vector<int> mss = {10, 20, 40, 80, 160};
  const auto parts = multiscale_partition(img, {0.3, 0.8}, mss);
  REQUIRE(parts.size() == mss.size());
  for (size_t s = 0; s < parts.size(); ++s) {
    CHECK(parts[s].scale_index == static_cast<int>(s + 1));
    CHECK(validate_partition(parts[s], mss[s]).empty());
    CHECK(parts[s].assignment == oversegment(img, {0.3, 0.8}, mss[s]).assignment);
    if (s > 0) {
      CHECK(parts[s].num_superpixels <= parts[s - 1].num_superpixels);
      // Nesting: each fine superpixel maps into exactly one coarse one.
      std::vector<int> parent(parts[s - 1].num_superpixels, -1);
      for (size_t p = 0; p < parts[s].assignment.size(); ++p) {
        int& par = parent[parts[s - 1].assignment[p]];
        if (par < 0) par = parts[s].assignment[p];
        CHECK(par == parts[s].assignment[p]);
      }
    }
  }
}

TEST_CASE("six scales on a larger image") {
  const Image img = testutil::noise_image(160, 120, 2);
  const std::vector<int> mss = {100, 200, 400, 800, 1600, 3200};
  const auto parts = multiscale_partition(img, {}, mss);
  CHECK(parts.size() == 6);
  for (size_t s = 0; s < parts.size(); ++s) CHECK(validate_partition(parts[s], mss[s]).empty());
}

TEST_CASE("a saturated size floor gives one superpixel at every scale") {
  const Image img = testutil::noise_image(10, 10, 5);
  const std::vector<int> mss = {100};
  const auto parts = multiscale_partition(img, {}, mss);
  CHECK(parts.front().num_superpixels == 1);
}

TEST_CASE("invalid scale lists are rejected") {
  const Image img = testutil::noise_image(8, 8, 1);
  CHECK_THROWS_AS(multiscale_partition(img, {}, std::vector<int>{}), ConfigError);
  CHECK_THROWS_AS(multiscale_partition(img, {}, std::vector<int>{20, 10}), ConfigError);
  CHECK_THROWS_AS(multiscale_partition(img, {}, std::vector<int>{10, 10}), ConfigError);
}

TEST_CASE("superpixels are more uniform than merged neighbour pairs on average") {
  const Image img = testutil::noise_image(64, 48, 9);
  Image smooth(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) smooth.at(x, y, c) = 0.5 * img.at(x, y, c) + (x < 32 ? 0.0 : 0.5);
  const Partition p = oversegment(smooth, {0.5, 0.8}, 20);
  const int n = p.num_superpixels;
  std::vector<double> sum(n * 3, 0.0), sq(n * 3, 0.0);
  std::vector<double> cnt(n, 0.0);
  for (int i = 0; i < smooth.area(); ++i) {
    const int id = p.assignment[i];
    cnt[id] += 1;
    for (int c = 0; c < 3; ++c) {
      sum[id * 3 + c] += smooth.at(i, c);
      sq[id * 3 + c] += smooth.at(i, c) * smooth.at(i, c);
    }
  }
  auto var = [&](std::initializer_list<int> ids) {
    double s[3] = {0, 0, 0}, q[3] = {0, 0, 0}, m = 0;
    for (int id : ids) {
      m += cnt[id];
      for (int c = 0; c < 3; ++c) {
        s[c] += sum[id * 3 + c];
        q[c] += sq[id * 3 + c];
      }
    }
    double v = 0;
    for (int c = 0; c < 3; ++c) v += q[c] / m - (s[c] / m) * (s[c] / m);
    return v;
  };
  std::set<std::pair<int, int>> adj;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      const int a = p.assignment[y * 64 + x];
      if (x + 1 < 64 && p.assignment[y * 64 + x + 1] != a)
        adj.insert({std::min(a, p.assignment[y * 64 + x + 1]), std::max(a, p.assignment[y * 64 + x + 1])});
      if (y + 1 < 48 && p.assignment[(y + 1) * 64 + x] != a)
        adj.insert({std::min(a, p.assignment[(y + 1) * 64 + x]), std::max(a, p.assignment[(y + 1) * 64 + x])});
    }
  REQUIRE_FALSE(adj.empty());
  double own = 0, merged = 0;
  for (const auto& [a, b] : adj) {
    own += 0.5 * (var({a}) + var({b}));
    merged += var({a, b});
  }
  CHECK(own <= merged);
}

TEST_CASE("partition export round-trips through the CSV sidecar") {
  const Image img = testutil::noise_image(20, 15, 4);
  const Partition p = oversegment(img, {}, 12);
  const std::string dir = testutil::temp_dir("partition");
  write_partition(dir + "/p.png", dir + "/p.csv", p);
  std::ifstream in(dir + "/p.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "pixel_index,superpixel_id");
  int idx = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    CHECK(std::stoi(line.substr(0, comma)) == idx);
    CHECK(std::stoi(line.substr(comma + 1)) == p.assignment[idx]);
    ++idx;
  }
  CHECK(idx == img.area());
  const Image back = read_image(dir + "/p.png");
  for (int i = 0; i < img.area(); ++i) {
    const int id = static_cast<int>(std::lround(back.at(i, 0) * 255)) << 16 |
                   static_cast<int>(std::lround(back.at(i, 1) * 255)) << 8 |
                   static_cast<int>(std::lround(back.at(i, 2) * 255));
    CHECK(id == p.assignment[i]);
  }
}
