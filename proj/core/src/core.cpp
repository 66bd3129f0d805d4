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

#include "ctxreject/core.hpp"

#include <map>
#include <string>

#include "ctxreject/errors.hpp"

namespace ctxreject {

LabelSet::LabelSet(int num_classes) {
  if (num_classes < 1) throw ConfigError("num_classes must be positive");
  superclass_of_.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) superclass_of_[c] = c;
  num_superclasses_ = num_classes;
}

LabelSet::LabelSet(const std::vector<int>& superclass_of) {
  if (superclass_of.empty()) throw ConfigError("num_classes must be positive");
  std::map<int, int> renumber;
  superclass_of_.reserve(superclass_of.size());
  for (int tag : superclass_of) {
    auto [it, inserted] = renumber.try_emplace(tag, static_cast<int>(renumber.size()));
    superclass_of_.push_back(it->second);
  }
  num_superclasses_ = static_cast<int>(renumber.size());
}

int LabelSet::superclass(Label c) const {
  if (!is_class(c)) throw DataError("label " + std::to_string(c) + " is not a class");
  return superclass_of_[c];
}

bool LabelSet::same_superclass(Label a, Label b) const {
  if (!is_class(a) || !is_class(b)) return false;
  return superclass_of_[a] == superclass_of_[b];
}

CostMatrix build_cost_matrix(const LabelSet& labels, double g, double rho) {
  if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("g out of [0,1]");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho out of [0,1]");
  const int n = labels.num_classes();
  CostMatrix cm;
  cm.g_ = g;
  cm.rho_ = rho;
  cm.entries_.resize(n + 1, n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      if (k == j)
        cm.entries_(k, j) = 0.0;
      else
        cm.entries_(k, j) = labels.same_superclass(k, j) ? g : 1.0;
    }
  }
  cm.entries_.row(n).setConstant(rho);
  return cm;
}

double interaction(const LabelSet& labels, Label a, Label b, double psi_c, double psi_r) {
  if (a == b) return 0.0;
  if (labels.same_superclass(a, b)) return psi_c;
  if (labels.is_reject(a) || labels.is_reject(b)) return psi_r;
  return 1.0;
}

bool is_metric(double psi_c, double psi_r) {
  return psi_c > 0.0 && psi_r > 0.0 && 1.0 <= 2.0 * psi_r && psi_c <= 2.0 * psi_r;
}

bool is_metric(const LabelSet& labels, double psi_c, double psi_r) {
  const int n = labels.num_labels();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double ab = interaction(labels, a, b, psi_c, psi_r);
      if (ab != interaction(labels, b, a, psi_c, psi_r)) return false;
      if (a != b && !(ab > 0.0)) return false;
      for (int c = 0; c < n; ++c) {
        if (interaction(labels, a, c, psi_c, psi_r) >
            ab + interaction(labels, b, c, psi_c, psi_r))
          return false;
      }
    }
  }
  return true;
}

}  // namespace ctxreject
