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

#include "ctxreject/metrics.hpp"

#include <cmath>
#include <limits>

#include "ctxreject/errors.hpp"

namespace ctxreject {

EvalCounts confusion_counts(std::span<const Label> pred, std::span<const Label> base,
                            std::span<const Label> truth, const LabelSet& labels,
                            std::span<const double> weights) {
  if (pred.size() != base.size() || pred.size() != truth.size())
    throw DataError("prediction, base and truth lengths differ");
  if (!weights.empty() && weights.size() != pred.size())
    throw DataError("weights length differs from predictions");
  EvalCounts c;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const bool rejected = labels.is_reject(pred[i]);
    const bool correct = base[i] == truth[i];
    c.n += w;
    if (correct && !rejected) c.cn += w;
    if (!correct && !rejected) c.in += w;
    if (correct && rejected) c.cr += w;
    if (!correct && rejected) c.ir += w;
  }
  return c;
}

Metric nonrejected_accuracy(const EvalCounts& c) {
  const double kept = c.cn + c.in;
  if (kept <= 0.0) return {1.0, "no_nonrejected"};
  return {c.cn / kept, {}};
}

double rejected_fraction(const EvalCounts& c) { return c.n > 0.0 ? (c.cr + c.ir) / c.n : 0.0; }

double classification_quality(const EvalCounts& c) {
  return c.n > 0.0 ? (c.cn + c.ir) / c.n : 0.0;
}

Metric rejection_quality(const EvalCounts& c) {
  if (c.cr + c.ir <= 0.0) return {std::numeric_limits<double>::quiet_NaN(), "no_rejected"};
  if (c.ir + c.in <= 0.0) return {1.0, "no_incorrect"};
  if (c.cr <= 0.0) return {std::numeric_limits<double>::infinity(), {}};
  // cn + cr > 0 here: otherwise cr = 0 was handled above.
  return {(c.ir / c.cr) / ((c.ir + c.in) / (c.cn + c.cr)), {}};
}

MetricsSummary summarize(const EvalCounts& c) {
  return {c, nonrejected_accuracy(c), rejected_fraction(c), classification_quality(c),
          rejection_quality(c)};
}

}  // namespace ctxreject
