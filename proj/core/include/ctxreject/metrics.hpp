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
#include <string>
#include <vector>

#include "ctxreject/core.hpp"

namespace ctxreject {

/// Tallies of the two binary outcomes (correct, rejected). Weights are
/// real so pixel-weighted tallies share the type.
struct EvalCounts {
  double n = 0;
  double cn = 0;  ///< correct, not rejected
  double in = 0;  ///< incorrect, not rejected
  double cr = 0;  ///< correct, rejected
  double ir = 0;  ///< incorrect, rejected
};

/// `pred` is the final labeling (reject allowed), `base` the label the
/// classifier gives without rejection and `truth` the true class; all
/// zero-based. `weights`, if non-empty, weights each sample. Throws
/// DataError on length mismatch.
EvalCounts confusion_counts(std::span<const Label> pred, std::span<const Label> base,
                            std::span<const Label> truth, const LabelSet& labels,
                            std::span<const double> weights = {});

/// A value together with the degenerate case that produced it, if any.
struct Metric {
  double value = 0.0;
  std::string flag;  ///< empty when the value is well defined

  bool defined() const { return flag.empty(); }
};

/// cn / (cn + in); 1 with flag "no_nonrejected" when everything is rejected.
Metric nonrejected_accuracy(const EvalCounts& c);

/// (cr + ir) / n.
double rejected_fraction(const EvalCounts& c);

/// (cn + ir) / n.
double classification_quality(const EvalCounts& c);

/// (ir / cr) / ((ir + in) / (cn + cr)). Degenerate conventions:
/// no rejected samples -> flag "no_rejected" (value NaN); no incorrect
/// samples -> 1 with flag "no_incorrect"; cr = 0 < ir -> +infinity.
Metric rejection_quality(const EvalCounts& c);

struct MetricsSummary {
  EvalCounts counts;
  Metric accuracy;
  double rejected = 0.0;
  double quality = 0.0;
  Metric phi;
};

MetricsSummary summarize(const EvalCounts& c);

}  // namespace ctxreject
