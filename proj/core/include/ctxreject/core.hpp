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

#include <Eigen/Core>
#include <vector>

namespace ctxreject {

/// Zero-based label. Classes occupy 0..N-1 and the reject label is N.
/// Files written by the CLI use the one-based convention (classes 1..N,
/// reject N+1).
using Label = int;

/// The class labels, their grouping into superclasses, and the extra
/// reject label.
class LabelSet {
 public:
  /// Every class is its own superclass.
  explicit LabelSet(int num_classes);

  /// `superclass_of[c]` is an arbitrary integer tag for class c; classes
  /// sharing a tag share a superclass. Tags are renumbered 0..L-1 in
  /// order of first appearance.
  explicit LabelSet(const std::vector<int>& superclass_of);

  int num_classes() const { return static_cast<int>(superclass_of_.size()); }
  int num_labels() const { return num_classes() + 1; }
  int num_superclasses() const { return num_superclasses_; }
  Label reject() const { return num_classes(); }
  bool is_reject(Label l) const { return l == reject(); }
  bool is_class(Label l) const { return l >= 0 && l < num_classes(); }

  int superclass(Label c) const;

  /// True for two classes (possibly equal) in the same superclass. The
  /// reject label belongs to no superclass.
  bool same_superclass(Label a, Label b) const;

  const std::vector<int>& superclass_of() const { return superclass_of_; }

 private:
  std::vector<int> superclass_of_;
  int num_superclasses_ = 0;
};

/// (N+1) x N matrix of decision costs: entry (k, j) is the cost of deciding
/// label k when the true class is j. Row N is the rejection row.
class CostMatrix {
 public:
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(Label decided, Label truth) const { return entries_(decided, truth); }
  double g() const { return g_; }
  double rho() const { return rho_; }
  int num_classes() const { return static_cast<int>(entries_.cols()); }

 private:
  friend CostMatrix build_cost_matrix(const LabelSet&, double, double);
  Eigen::MatrixXd entries_;
  double g_ = 0.0;
  double rho_ = 0.0;
};

/// Costs are 0 on the diagonal, g between distinct classes of one
/// superclass, 1 otherwise, and rho on the whole reject row.
/// Throws ConfigError unless 0 <= g <= 1 and 0 <= rho <= 1.
CostMatrix build_cost_matrix(const LabelSet& labels, double g, double rho);

/// Pairwise label penalty over the extended label set:
///   0      if a == b
///   psi_c  if a != b share a superclass
///   psi_r  if exactly one of a, b is the reject label
///   1      otherwise
double interaction(const LabelSet& labels, Label a, Label b, double psi_c, double psi_r);

/// Whether the interaction penalty is a metric for every possible
/// superclass structure: psi_c > 0, psi_r > 0, 1 <= 2 psi_r and
/// psi_c <= 2 psi_r.
bool is_metric(double psi_c, double psi_r);

/// Exact metric check for one superclass structure, by enumerating every
/// label triple.
bool is_metric(const LabelSet& labels, double psi_c, double psi_r);

}  // namespace ctxreject
