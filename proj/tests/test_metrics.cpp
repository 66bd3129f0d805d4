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
#include <vector>

#include "ctxreject/errors.hpp"
#include "ctxreject/metrics.hpp"
#include "doctest.h"

using namespace ctxreject;

TEST_CASE("metric examples") {
  EvalCounts c{10, 8, 1, 0, 1};
  MetricsSummary s = summarize(c);
  CHECK(s.accuracy.value == doctest::Approx(8.0 / 9.0));
  CHECK(s.accuracy.defined());
  CHECK(s.rejected == doctest::Approx(0.1));
  CHECK(s.quality == doctest::Approx(0.9));
  CHECK(std::isinf(s.phi.value));
  CHECK(s.phi.defined());

  c = {9, 5, 1, 1, 2};
  CHECK(rejection_quality(c).value == doctest::Approx(4.0));
  CHECK(classification_quality(c) == doctest::Approx(7.0 / 9.0));
  CHECK(rejected_fraction(c) == doctest::Approx(3.0 / 9.0));
}

TEST_CASE("degenerate conventions") {
  const EvalCounts all_rejected{4, 0, 0, 3, 1};
  CHECK(nonrejected_accuracy(all_rejected).flag == "no_nonrejected");
  CHECK(nonrejected_accuracy(all_rejected).value == 1.0);
  CHECK(rejected_fraction(all_rejected) == 1.0);

  const EvalCounts none_rejected{4, 3, 1, 0, 0};
  CHECK(rejection_quality(none_rejected).flag == "no_rejected");
  CHECK(std::isnan(rejection_quality(none_rejected).value));
  CHECK(rejected_fraction(none_rejected) == 0.0);
  CHECK(classification_quality(none_rejected) == doctest::Approx(0.75));

  const EvalCounts all_correct{4, 3, 0, 1, 0};
  CHECK(rejection_quality(all_correct).flag == "no_incorrect");
  CHECK(rejection_quality(all_correct).value == 1.0);
  CHECK(nonrejected_accuracy(all_correct).value == 1.0);

  const EvalCounts empty{};
  CHECK(rejected_fraction(empty) == 0.0);
  CHECK(classification_quality(empty) == 0.0);
}

TEST_CASE("confusion counts from label arrays") {
  const LabelSet labels(3);  // reject = 3
  const std::vector<Label> truth{0, 1, 2, 0, 1, 2};
  const std::vector<Label> base{0, 1, 0, 0, 2, 2};
  const std::vector<Label> pred{0, 1, 0, 3, 3, 2};
  EvalCounts c = confusion_counts(pred, base, truth, labels);
  CHECK(c.n == 6);
  CHECK(c.cn == 3);
  CHECK(c.in == 1);
  CHECK(c.cr == 1);
  CHECK(c.ir == 1);
  const std::vector<double> w{1, 2, 3, 4, 5, 6};
  c = confusion_counts(pred, base, truth, labels, w);
  CHECK(c.n == 21);
  CHECK(c.cn == 9);
  CHECK(c.in == 3);
  CHECK(c.cr == 4);
  CHECK(c.ir == 5);
  CHECK_THROWS_AS(confusion_counts(std::vector<Label>{0}, base, truth, labels), DataError);
  CHECK_THROWS_AS(confusion_counts(pred, base, truth, labels, std::vector<double>{1.0}),
                  DataError);
}

TEST_CASE("metric properties over random counts") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10000; ++t) {
    EvalCounts c;
    c.cn = static_cast<double>(rng() % 50);
    c.in = static_cast<double>(rng() % 50);
    c.cr = static_cast<double>(rng() % 50);
    c.ir = static_cast<double>(rng() % 50);
    c.n = c.cn + c.in + c.cr + c.ir;
    if (c.n == 0) continue;
    const MetricsSummary s = summarize(c);
    CHECK(s.rejected >= 0.0);
    CHECK(s.rejected <= 1.0);
    CHECK(s.quality >= 0.0);
    CHECK(s.quality <= 1.0);
    if (s.accuracy.defined()) {
      CHECK(s.accuracy.value >= 0.0);
      CHECK(s.accuracy.value <= 1.0);
      // Quality decomposes into kept-correct and rejected-incorrect mass.
      CHECK(s.quality ==
            doctest::Approx(s.accuracy.value * (1.0 - s.rejected) + c.ir / c.n).epsilon(1e-12));
    }
    if (s.phi.defined() && std::isfinite(s.phi.value)) {
      CHECK(s.phi.value >= 0.0);
      const double odds_rejected = c.ir / c.cr;
      const double odds_overall = (c.ir + c.in) / (c.cn + c.cr);
      CHECK(s.phi.value == doctest::Approx(odds_rejected / odds_overall).epsilon(1e-12));
    }
    // Swapping rejection outcomes between a correct and an incorrect unit
    // moves quality by exactly 2/n.
    if (c.cr > 0 && c.in > 0) {
      EvalCounts d = c;
      d.cr -= 1;
      d.cn += 1;
      d.in -= 1;
      d.ir += 1;
      CHECK(classification_quality(d) - s.quality == doctest::Approx(2.0 / c.n).epsilon(1e-12));
    }
  }
}
