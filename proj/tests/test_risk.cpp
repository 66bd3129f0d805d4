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
#include <random>

#include "ctxreject/errors.hpp"
#include "ctxreject/risk.hpp"
#include "doctest.h"

using namespace ctxreject;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("risk examples") {
  const CostMatrix flat = build_cost_matrix(LabelSet(3), 0.5, 0.46);
  Eigen::VectorXd r = risk_vector(vec({0.7, 0.2, 0.1}), flat);
  REQUIRE(r.size() == 4);
  CHECK(r(0) == doctest::Approx(0.3));
  CHECK(r(1) == doctest::Approx(0.8));
  CHECK(r(2) == doctest::Approx(0.9));
  CHECK(r(3) == 0.46);
  CHECK(argmin_label(r) == 0);

  r = risk_vector(vec({0.0, 1.0, 0.0}), flat);
  CHECK(r(0) == 1.0);
  CHECK(r(1) == 0.0);
  CHECK(r(2) == 1.0);

  // Classes 0 and 1 share a superclass.
  const CostMatrix grouped = build_cost_matrix(LabelSet(std::vector<int>{0, 0, 1}), 0.5, 0.3);
  r = risk_vector(vec({0.4, 0.3, 0.3}), grouped);
  CHECK(r(0) == doctest::Approx(0.5 * 0.3 + 0.3));
  CHECK(r(1) == doctest::Approx(0.5 * 0.4 + 0.3));
  CHECK(r(2) == doctest::Approx(0.7));
  CHECK(r(3) == 0.3);
  CHECK(argmin_label(r) == 3);
}

TEST_CASE("map rule with rejection") {
  CHECK(map_with_rejection(vec({0.7, 0.2, 0.1}), 0.46) == 0);
  CHECK(map_with_rejection(vec({0.4, 0.35, 0.25}), 0.46) == 3);
  CHECK(map_with_rejection(vec({0.4, 0.35, 0.25}), 0.7) == 0);
  CHECK(map_with_rejection(vec({0.5, 0.5}), 0.5) == 2);
  CHECK(map_with_rejection(vec({0.2, 0.8}), 0.0) == 2);
  CHECK(map_with_rejection(vec({0.2, 0.8}), 1.0) == 1);
}

TEST_CASE("risk minimization equals the map rule with rejection") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int compared = 0;
  for (int n : {2, 3, 5}) {
    for (int t = 0; t < 10000 / 3 + 1; ++t) {
      Eigen::VectorXd p(n);
      for (int j = 0; j < n; ++j) p(j) = -std::log(u(rng) + 1e-300);
      p /= p.sum();
      const double rho = u(rng);
      const CostMatrix cm = build_cost_matrix(LabelSet(n), 0.5, rho);
      if (std::abs(1.0 - p.maxCoeff() - rho) < 1e-12) continue;
      CHECK(argmin_label(risk_vector(p, cm)) == map_with_rejection(p, rho));
      ++compared;
    }
  }
  CHECK(compared > 9900);
}

TEST_CASE("risk bounds and rejection monotonicity") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const int n = 2 + t % 5;
    std::vector<int> sc(n);
    for (auto& s : sc) s = static_cast<int>(rng() % 3);
    const LabelSet labels(sc);
    const double g = u(rng);
    Eigen::VectorXd p(n);
    for (int j = 0; j < n; ++j) p(j) = u(rng);
    p /= p.sum();
    const double rho = u(rng);
    const Eigen::VectorXd r = risk_vector(p, build_cost_matrix(labels, g, rho));
    for (int k = 0; k < n; ++k) {
      CHECK(r(k) >= -1e-15);
      CHECK(r(k) <= 1.0 - p(k) + 1e-12);
    }
    // Raising rho never turns a class decision into a rejection.
    const double rho2 = std::min(1.0, rho + u(rng) * (1.0 - rho));
    const Label a = map_with_rejection(p, rho);
    const Label b = map_with_rejection(p, rho2);
    if (a != n) CHECK(b == a);
  }
}

TEST_CASE("risk input validation") {
  const CostMatrix cm = build_cost_matrix(LabelSet(3), 0.5, 0.5);
  CHECK_THROWS_AS(risk_vector(vec({0.5, 0.6, 0.1}), cm), DataError);
  CHECK_THROWS_AS(risk_vector(vec({0.5, 0.5}), cm), DataError);
  Eigen::MatrixXd post(2, 3);
  post << 0.2, 0.3, 0.5, 1.0, 0.0, 0.0;
  const Eigen::MatrixXd table = risk_table(post, cm);
  CHECK(table.rows() == 2);
  CHECK(table.cols() == 4);
  CHECK(table(1, 0) == 0.0);
  CHECK(table(0, 3) == 0.5);
}
