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

#include "ctxreject/inference.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "ctxreject/errors.hpp"
#include "ctxreject/risk.hpp"

namespace ctxreject {

EnergyProblem::EnergyProblem(LabelSet labels, Eigen::MatrixXd data_term,
                             std::vector<PairTerm> pairs, double alpha, double psi_c,
                             double psi_r)
    : labels_(std::move(labels)),
      data_(std::move(data_term)),
      pairs_(std::move(pairs)),
      alpha_(alpha),
      psi_c_(psi_c),
      psi_r_(psi_r) {
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw ConfigError("alpha out of [0,1]");
  if (data_.cols() != labels_.num_labels())
    throw DataError("data term needs one column per label, including reject");
  if (!data_.allFinite()) throw DataError("data term is not finite");
  for (const auto& p : pairs_) {
    if (p.a < 0 || p.b < 0 || p.a >= num_nodes() || p.b >= num_nodes() || p.a == p.b)
      throw DataError("pair term references an invalid node");
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight))
      throw DataError("pair weights must be finite and nonnegative");
  }
  const int n = num_labels();
  psi_table_.resize(static_cast<size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) psi_table_[a * n + b] = interaction(labels_, a, b, psi_c, psi_r);
  // Every expansion move is submodular iff the triangle inequality holds
  // for every triple (the kept labels of both ends and the move label).
  submodular_ = true;
  for (int a = 0; a < n && submodular_; ++a)
    for (int b = 0; b < n && submodular_; ++b)
      for (int c = 0; c < n; ++c)
        if (psi(b, c) > psi(b, a) + psi(a, c)) {
          submodular_ = false;
          break;
        }
}

EnergyProblem EnergyProblem::from_risks(const LabelSet& labels, const Eigen::MatrixXd& risks,
                                        const MultiscaleGraph& graph, double alpha, double psi_c,
                                        double psi_r, double epsilon) {
  if (risks.rows() != graph.num_nodes()) throw DataError("one risk row per graph node required");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  Eigen::MatrixXd data = risks.unaryExpr([epsilon](double r) { return std::log(std::max(r, epsilon)); });
  std::vector<PairTerm> pairs;
  pairs.reserve(graph.intrascale_edges.size() + graph.interscale_edges.size());
  for (const auto& e : graph.all_edges()) pairs.push_back({e.a, e.b, e.weight});
  return EnergyProblem(labels, std::move(data), std::move(pairs), alpha, psi_c, psi_r);
}

double energy(const Labeling& lab, const EnergyProblem& prob) {
  if (static_cast<int>(lab.size()) != prob.num_nodes()) throw DataError("labeling is not total");
  double unary = 0.0;
  for (int i = 0; i < prob.num_nodes(); ++i) unary += prob.data_term()(i, lab[i]);
  double pairwise = 0.0;
  for (const auto& p : prob.pairs()) pairwise += p.weight * prob.psi(lab[p.a], lab[p.b]);
  return (1.0 - prob.alpha()) * unary + prob.alpha() * pairwise;
}

double shifted_energy(const Labeling& lab, const EnergyProblem& prob) {
  double shift = 0.0;
  for (int i = 0; i < prob.num_nodes(); ++i) shift += prob.data_term().row(i).minCoeff();
  return energy(lab, prob) - (1.0 - prob.alpha()) * shift;
}

namespace {

int allowed_labels(const EnergyProblem& prob) {
  return prob.reject_allowed() ? prob.num_labels() : prob.num_labels() - 1;
}

}  // namespace

Labeling unary_argmin(const EnergyProblem& prob) {
  Labeling out(prob.num_nodes());
  const int n = allowed_labels(prob);
  for (int i = 0; i < prob.num_nodes(); ++i)
    out[i] = argmin_label(prob.data_term().row(i).head(n).transpose());
  return out;
}

Labeling expansion_move(const Labeling& lab, Label move_label, const EnergyProblem& prob) {
  if (!prob.moves_submodular())
    throw ConfigError("interaction penalty is not metric; expansion moves are not graph-representable");
  if (move_label < 0 || move_label >= allowed_labels(prob))
    throw DataError("move label not allowed in this problem");
  const int n = prob.num_nodes();
  if (static_cast<int>(lab.size()) != n) throw DataError("labeling is not total");

  // Binary variable x_i = 1 (switch to move_label) iff node i ends on the
  // source side. Unary costs are accumulated as the cost of x_i = 1
  // relative to x_i = 0.
  const double wd = 1.0 - prob.alpha();
  const double wp = prob.alpha();
  std::vector<double> unary(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (lab[i] != move_label)
      unary[i] = wd * (prob.data_term()(i, move_label) - prob.data_term()(i, lab[i]));
  }
  const int source = n, sink = n + 1;
  MaxFlow net(n + 2);
  for (const auto& p : prob.pairs()) {
    const int i = p.a, j = p.b;
    const double scale = wp * p.weight;
    if (scale == 0.0) continue;
    const double e00 = scale * prob.psi(lab[i], lab[j]);
    const double e01 = scale * prob.psi(lab[i], move_label);
    const double e10 = scale * prob.psi(move_label, lab[j]);
    // E(xi, xj) = e00 + (e10 - e00) xi + (0 - e10) xj + (e01 + e10 - e00)(1 - xi) xj
    unary[i] += e10 - e00;
    unary[j] += -e10;
    const double coupling = std::max(0.0, e01 + e10 - e00);
    // (1 - xi) xj is paid when j is on the source side and i is not.
    if (coupling > 0.0) net.add_edge(j, i, coupling);
  }
  for (int i = 0; i < n; ++i) {
    if (unary[i] > 0.0)
      net.add_edge(i, sink, unary[i]);
    else if (unary[i] < 0.0)
      net.add_edge(source, i, -unary[i]);
  }
  net.solve(source, sink);
  Labeling out = lab;
  for (int i = 0; i < n; ++i)
    if (net.source_side()[i]) out[i] = move_label;
  // Rounding in the cut can only matter at exact ties; never go uphill.
  if (energy(out, prob) > energy(lab, prob)) return lab;
  return out;
}

Labeling alpha_expansion(const EnergyProblem& prob, const Labeling& init, int max_cycles,
                         ExpansionStats* stats) {
  if (static_cast<int>(init.size()) != prob.num_nodes()) throw DataError("labeling is not total");
  if (!prob.moves_submodular())
    throw ConfigError("interaction penalty is not metric; expansion moves are not graph-representable");
  Labeling current = init;
  double e = energy(current, prob);
  ExpansionStats local;
  ExpansionStats& st = stats ? *stats : local;
  st = {};
  st.energy_per_cycle.push_back(e);
  const int labels = allowed_labels(prob);
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    bool improved = false;
    for (Label l = 0; l < labels; ++l) {
      Labeling cand = expansion_move(current, l, prob);
      const double ce = energy(cand, prob);
      assert(ce <= e);
      if (ce < e - 1e-12 * std::max(1.0, std::abs(e))) {
        current = std::move(cand);
        e = ce;
        improved = true;
        ++st.accepted_moves;
      }
    }
    ++st.cycles;
    st.energy_per_cycle.push_back(e);
    if (!improved) break;
  }
  return current;
}

Labeling alpha_expansion(const EnergyProblem& prob, int max_cycles, ExpansionStats* stats) {
  return alpha_expansion(prob, unary_argmin(prob), max_cycles, stats);
}

Labeling brute_force_map(const EnergyProblem& prob) {
  const int n = prob.num_nodes();
  const int labels = allowed_labels(prob);
  double total = 1.0;
  for (int i = 0; i < n; ++i) total *= labels;
  if (total > 1e7) throw ConfigError("instance too large for exhaustive search");
  Labeling cur(n, 0), best(n, 0);
  double best_e = std::numeric_limits<double>::infinity();
  while (true) {
    const double e = energy(cur, prob);
    if (e < best_e) {
      best_e = e;
      best = cur;
    }
    int pos = n - 1;
    while (pos >= 0 && cur[pos] == labels - 1) cur[pos--] = 0;
    if (pos < 0) break;
    ++cur[pos];
  }
  return best;
}

double psi_ratio(const EnergyProblem& prob) {
  const int labels = allowed_labels(prob);
  double hi = 0.0, lo = std::numeric_limits<double>::infinity();
  for (int a = 0; a < labels; ++a)
    for (int b = 0; b < labels; ++b) {
      if (a == b) continue;
      const double v = prob.psi(a, b);
      hi = std::max(hi, v);
      if (v > 0.0) lo = std::min(lo, v);
    }
  return std::isfinite(lo) ? hi / lo : 1.0;
}

}  // namespace ctxreject
