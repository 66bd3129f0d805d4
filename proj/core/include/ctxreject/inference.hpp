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
#include <string>
#include <vector>

#include "ctxreject/core.hpp"
#include "ctxreject/maxflow.hpp"
#include "ctxreject/msgraph.hpp"

namespace ctxreject {

/// Weighted undirected pair of nodes in an energy problem.
struct PairTerm {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

/// (1 - alpha) sum_i D_i(y_i) + alpha sum_(i,j) w_ij psi(y_i, y_j) over
/// labelings in the extended label set.
class EnergyProblem {
 public:
  /// `data_term` is num_nodes x (N + 1). Throws ConfigError if alpha is
  /// outside [0, 1] and DataError if the data term is not finite or the
  /// pair terms reference missing nodes.
  EnergyProblem(LabelSet labels, Eigen::MatrixXd data_term, std::vector<PairTerm> pairs,
                double alpha, double psi_c, double psi_r);

  /// Data term log(max(R, epsilon)) from a risk table.
  static EnergyProblem from_risks(const LabelSet& labels, const Eigen::MatrixXd& risks,
                                  const MultiscaleGraph& graph, double alpha, double psi_c,
                                  double psi_r, double epsilon);

  const LabelSet& labels() const { return labels_; }
  const Eigen::MatrixXd& data_term() const { return data_; }
  const std::vector<PairTerm>& pairs() const { return pairs_; }
  double alpha() const { return alpha_; }
  double psi_c() const { return psi_c_; }
  double psi_r() const { return psi_r_; }
  int num_nodes() const { return static_cast<int>(data_.rows()); }
  int num_labels() const { return static_cast<int>(data_.cols()); }

  double psi(Label a, Label b) const { return psi_table_[a * num_labels() + b]; }

  /// Whether every binary expansion move is graph-representable, i.e.
  /// psi(b, c) <= psi(b, a) + psi(a, c) for every label triple.
  bool moves_submodular() const { return submodular_; }

  /// Restricts the labels that expansion may assign. Disallowing the
  /// reject label yields the context-only classification.
  void set_reject_allowed(bool allowed) { reject_allowed_ = allowed; }
  bool reject_allowed() const { return reject_allowed_; }

 private:
  LabelSet labels_;
  Eigen::MatrixXd data_;
  std::vector<PairTerm> pairs_;
  double alpha_;
  double psi_c_;
  double psi_r_;
  std::vector<double> psi_table_;
  bool submodular_ = false;
  bool reject_allowed_ = true;
};

using Labeling = std::vector<Label>;

double energy(const Labeling& lab, const EnergyProblem& prob);

/// Energy with every node's data term shifted so its minimum is zero. The
/// shift is a constant, so minimizers are unchanged; the result is
/// nonnegative, which is what multiplicative optimality bounds refer to.
double shifted_energy(const Labeling& lab, const EnergyProblem& prob);

/// Per-node minimizer of the data term, smallest label on ties. Only
/// classes are considered when the problem disallows rejection.
Labeling unary_argmin(const EnergyProblem& prob);

/// Best labeling in which every node either keeps its label or takes
/// `move_label`, solved exactly by one min-cut. Never increases the energy.
/// Throws ConfigError when the moves are not submodular.
Labeling expansion_move(const Labeling& lab, Label move_label, const EnergyProblem& prob);

struct ExpansionStats {
  int cycles = 0;
  int accepted_moves = 0;
  std::vector<double> energy_per_cycle;  ///< [0] is the initial energy
};

/// Cycles the expansion move over classes 0..N-1 and then the reject label
/// until a full cycle brings no decrease or `max_cycles` is reached.
Labeling alpha_expansion(const EnergyProblem& prob, const Labeling& init, int max_cycles = 10,
                         ExpansionStats* stats = nullptr);
Labeling alpha_expansion(const EnergyProblem& prob, int max_cycles = 10,
                         ExpansionStats* stats = nullptr);

/// Exhaustive minimization; the lexicographically smallest optimum wins
/// ties. Refuses (ConfigError) beyond 1e7 labelings.
Labeling brute_force_map(const EnergyProblem& prob);

/// max psi over distinct labels divided by min nonzero psi over distinct
/// labels, restricted to the labels expansion may use.
double psi_ratio(const EnergyProblem& prob);

}  // namespace ctxreject
