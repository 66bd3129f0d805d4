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

#include <random>

#include "ctxreject/config.hpp"
#include "ctxreject/core.hpp"
#include "ctxreject/errors.hpp"
#include "doctest.h"

using namespace ctxreject;

TEST_CASE("cost matrix with singleton superclasses is the 0/1 matrix") {
  const CostMatrix cm = build_cost_matrix(LabelSet(3), 0.3, 0.5);
  REQUIRE(cm.entries().rows() == 4);
  REQUIRE(cm.entries().cols() == 3);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) CHECK(cm(k, j) == (k == j ? 0.0 : 1.0));
  for (int j = 0; j < 3; ++j) CHECK(cm(3, j) == 0.5);
}

TEST_CASE("cost matrix with a shared superclass") {
  const LabelSet ls({0, 0, 1});
  const CostMatrix cm = build_cost_matrix(ls, 0.7, 0.46);
  CHECK(cm(0, 1) == 0.7);
  CHECK(cm(1, 0) == 0.7);
  CHECK(cm(0, 2) == 1.0);
  CHECK(cm(2, 0) == 1.0);
  CHECK(cm(1, 2) == 1.0);
  CHECK(cm(2, 1) == 1.0);
  for (int j = 0; j < 3; ++j) {
    CHECK(cm(j, j) == 0.0);
    CHECK(cm(3, j) == 0.46);
  }
}

TEST_CASE("cost matrix for one class") {
  const CostMatrix cm = build_cost_matrix(LabelSet(1), 0.7, 0.25);
  REQUIRE(cm.entries().rows() == 2);
  REQUIRE(cm.entries().cols() == 1);
  CHECK(cm(0, 0) == 0.0);
  CHECK(cm(1, 0) == 0.25);
}

TEST_CASE("cost matrix rejects out-of-range parameters") {
  CHECK_THROWS_AS(build_cost_matrix(LabelSet(2), 1.5, 0.5), ConfigError);
  CHECK_THROWS_AS(build_cost_matrix(LabelSet(2), 0.5, -0.1), ConfigError);
  CHECK_THROWS_AS(build_cost_matrix(LabelSet(2), 0.5, 1.01), ConfigError);
}

TEST_CASE("cost matrix is deterministic with entries in {0, g, 1, rho}") {
  const LabelSet ls({3, 3, 7, 7, 1});
  const CostMatrix a = build_cost_matrix(ls, 0.6, 0.4);
  const CostMatrix b = build_cost_matrix(ls, 0.6, 0.4);
  CHECK(a.entries() == b.entries());
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 5; ++j) {
      const double v = a(k, j);
      CHECK((v == 0.0 || v == 0.6 || v == 1.0));
    }
}

TEST_CASE("label set renumbers superclass tags in order of appearance") {
  const LabelSet ls({9, 4, 9, 2});
  CHECK(ls.num_classes() == 4);
  CHECK(ls.num_labels() == 5);
  CHECK(ls.num_superclasses() == 3);
  CHECK(ls.superclass(0) == 0);
  CHECK(ls.superclass(1) == 1);
  CHECK(ls.superclass(2) == 0);
  CHECK(ls.superclass(3) == 2);
  CHECK(ls.reject() == 4);
  CHECK(ls.same_superclass(0, 2));
  CHECK_FALSE(ls.same_superclass(0, 1));
  CHECK_FALSE(ls.same_superclass(0, ls.reject()));
}

TEST_CASE("interaction penalty values") {
  const LabelSet ls({0, 0, 1});
  CHECK(interaction(ls, 1, 1, 0.7, 0.5) == 0.0);
  CHECK(interaction(ls, 0, 1, 0.7, 0.5) == 0.7);
  CHECK(interaction(ls, ls.reject(), 2, 0.7, 0.5) == 0.5);
  CHECK(interaction(ls, 2, ls.reject(), 0.7, 0.5) == 0.5);
  CHECK(interaction(ls, 0, 2, 0.7, 0.5) == 1.0);
}

TEST_CASE("metric check examples") {
  CHECK(is_metric(0.7, 0.5));
  CHECK_FALSE(is_metric(0.7, 0.2));
  CHECK(is_metric(1.0, 1.0));
  CHECK_FALSE(is_metric(0.0, 0.5));
  CHECK_FALSE(is_metric(0.5, 0.0));
}

namespace {

// Every superclass structure of n classes, as restricted-growth strings.
void structures(int n, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  int top = -1;
  for (int v : cur) top = std::max(top, v);
  for (int v = 0; v <= top + 1; ++v) {
    cur.push_back(v);
    structures(n, cur, out);
    cur.pop_back();
  }
}

bool triangle_brute_force(const LabelSet& ls, double pc, double pr) {
  const int n = ls.num_labels();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double ab = interaction(ls, a, b, pc, pr);
      if (ab != interaction(ls, b, a, pc, pr)) return false;
      if ((a == b) != (ab == 0.0)) return false;
      for (int c = 0; c < n; ++c)
        if (interaction(ls, a, c, pc, pr) > ab + interaction(ls, b, c, pc, pr)) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("metric check agrees with exhaustive triangle check over all structures") {
  std::vector<std::vector<int>> all;
  for (int n = 1; n <= 4; ++n) {
    std::vector<int> cur;
    structures(n, cur, all);
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> params = {{0.7, 0.5}, {0.7, 0.2}, {1.0, 1.0},
                                                   {0.5, 0.5}, {0.4, 0.6}, {1.0, 0.5}};
  for (int t = 0; t < 300; ++t) params.emplace_back(u(rng), u(rng));
  for (const auto& [pc, pr] : params) {
    bool all_ok = true;
    for (const auto& s : all) {
      const LabelSet ls(s);
      const bool brute = triangle_brute_force(ls, pc, pr);
      CHECK(is_metric(ls, pc, pr) == brute);
      if (is_metric(pc, pr)) CHECK(brute);
      all_ok = all_ok && brute;
    }
    CHECK(is_metric(pc, pr) == all_ok);
  }
}

TEST_CASE("metric check for six classes") {
  const LabelSet ls({0, 0, 1, 1, 2, 2});
  CHECK(is_metric(ls, 0.7, 0.5) == triangle_brute_force(ls, 0.7, 0.5));
  CHECK(is_metric(ls, 0.7, 0.5));
  CHECK_FALSE(is_metric(ls, 0.7, 0.2));
}

TEST_CASE("default config is valid") {
  PipelineConfig cfg;
  cfg.alpha = 0.58;
  cfg.rho = 0.46;
  CHECK(validate_config(cfg).empty());
  CHECK_NOTHROW(require_valid(cfg));
}

TEST_CASE("config violations are named") {
  PipelineConfig cfg;
  cfg.alpha = 1.2;
  auto v = validate_config(cfg);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "alpha");
  CHECK(v[0].message == "alpha out of [0,1]");
  CHECK_THROWS_AS(require_valid(cfg), ConfigError);

  cfg = {};
  cfg.mss_list = {200, 100};
  v = validate_config(cfg);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message == "mss_list not increasing");

  cfg = {};
  cfg.psi_r = 0.2;
  CHECK_FALSE(validate_config(cfg).empty());
}

TEST_CASE("config text round-trips") {
  PipelineConfig cfg;
  cfg.alpha = 0.3;
  cfg.rho = 0.125;
  cfg.superclasses = {0, 0, 1};
  cfg.mss_list = {50, 100};
  cfg.metric_base = "context_free";
  cfg.pixel_weighted = false;
  cfg.seed = 12345678901ULL;
  const std::string text = config_to_text(cfg);
  const PipelineConfig back = parse_config(text);
  CHECK(config_to_text(back) == text);
  CHECK(back.alpha == 0.3);
  CHECK(back.superclasses == std::vector<int>{0, 0, 1});
  CHECK(back.seed == 12345678901ULL);
  CHECK_FALSE(back.pixel_weighted);
}

TEST_CASE("config parser rejects unknown keys and bad values") {
  CHECK_THROWS_AS(parse_config("alhpa = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("alpha 0.5\n"), ConfigError);
  const PipelineConfig cfg = parse_config("# comment\n\nalpha = 0.1\nalpha = 0.2\n");
  CHECK(cfg.alpha == 0.2);
}
