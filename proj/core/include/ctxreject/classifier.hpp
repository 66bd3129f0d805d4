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

namespace ctxreject {

/// Labeled samples for training, features stored one per row.
struct TrainingSet {
  Eigen::MatrixXd features;   ///< q x m
  std::vector<Label> labels;  ///< zero-based classes
  std::vector<int> indices;   ///< source superpixel ids (unique)
  int num_classes = 0;

  int size() const { return static_cast<int>(labels.size()); }
};

/// Kernelized multinomial logistic regression. The last column of W is
/// pinned to zero.
struct Regressor {
  Eigen::MatrixXd W;               ///< (q + 1) x N
  Eigen::MatrixXd train_features;  ///< q x m
  double bandwidth = 1.0;
  double lambda = 0.0;

  int num_classes() const { return static_cast<int>(W.cols()); }
};

/// (1, exp(-|f - t_1|^2 / 2h^2), ..., exp(-|f - t_q|^2 / 2h^2)).
Eigen::VectorXd rbf_vector(const Eigen::MatrixXd& train_features,
                           const Eigen::Ref<const Eigen::VectorXd>& f, double h);

/// Kernel design matrix, one rbf_vector per column: (q + 1) x rows(samples).
Eigen::MatrixXd rbf_design(const Eigen::MatrixXd& train_features, const Eigen::MatrixXd& samples,
                           double h);

struct BandwidthResult {
  double h = 1.0;
  bool degenerate = false;  ///< every pair coincided; h fell back to 1
};

/// Square root of the mean train x test Euclidean distance.
BandwidthResult select_bandwidth(const Eigen::MatrixXd& train_features,
                                 const Eigen::MatrixXd& test_features);

/// Softmax of W^T k, evaluated with max-subtraction.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);
Eigen::VectorXd mlr_posterior(const Regressor& reg, const Eigen::Ref<const Eigen::VectorXd>& f);

/// Posteriors for every row of `samples`, one row per sample (rows x N).
Eigen::MatrixXd mlr_posteriors(const Regressor& reg, const Eigen::MatrixXd& samples);

// Objective pieces over a design matrix X (d x q, one sample per column).

/// -l(W) = sum_i log sum_j exp(w_j^T x_i) - w_{y_i}^T x_i.
double mlr_neg_log_likelihood(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                              const Eigen::MatrixXd& W);

/// Gradient of -l(W) with respect to W (d x N). The last column is zero.
Eigen::MatrixXd mlr_gradient(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                             const Eigen::MatrixXd& W);

/// Quadratic upper bound of -l at W around Wt using the label-independent
/// curvature 1/2 (I - 11^T/N) (x) X X^T over the free columns.
double mlr_surrogate(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                     const Eigen::MatrixXd& W, const Eigen::MatrixXd& Wt);

struct LorsalParams {
  double lambda = 10.0;
  int max_outer = 100;
  double tol = 1e-6;
  double mu = 1.0;
  int max_inner = 200;
  double inner_tol = 1e-6;
};

struct LorsalTrace {
  std::vector<double> objective;  ///< -l(W) + lambda |W|_1 after each outer step, [0] = start
  int outer_iterations = 0;
  bool converged = false;
};

/// Minimizes -l(W) + lambda |W|_{1,1} over W with the last column fixed at
/// zero. Each outer step majorizes -l by mlr_surrogate and solves the
/// resulting l2-l1 problem by variable splitting with soft thresholding.
/// Throws DataError for an empty problem and NumericalError if the
/// objective stops being finite.
Eigen::MatrixXd lorsal_fit(const Eigen::MatrixXd& X, const std::vector<Label>& y, int num_classes,
                           const LorsalParams& params, LorsalTrace* trace = nullptr);

/// Kernelizes the training set with bandwidth `h` and fits W.
Regressor lorsal_train(const TrainingSet& ts, double h, const LorsalParams& params,
                       LorsalTrace* trace = nullptr);

double lorsal_objective(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                        const Eigen::MatrixXd& W, double lambda);

/// Entries with |w| > tol.
int count_nonzero(const Eigen::MatrixXd& W, double tol = 1e-8);

/// Writes <prefix>_W.csv, <prefix>_train.csv and <prefix>_meta.txt.
void save_regressor(const std::string& prefix, const Regressor& reg, std::uint64_t seed);
Regressor load_regressor(const std::string& prefix);

}  // namespace ctxreject
