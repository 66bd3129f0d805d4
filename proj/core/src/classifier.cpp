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

#include "ctxreject/classifier.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ctxreject/errors.hpp"

namespace ctxreject {

Eigen::VectorXd rbf_vector(const Eigen::MatrixXd& train_features,
                           const Eigen::Ref<const Eigen::VectorXd>& f, double h) {
  if (!(h > 0.0)) throw ConfigError("RBF bandwidth must be > 0");
  const int q = static_cast<int>(train_features.rows());
  Eigen::VectorXd k(q + 1);
  k(0) = 1.0;
  const double denom = 2.0 * h * h;
  for (int i = 0; i < q; ++i)
    k(i + 1) = std::exp(-(train_features.row(i).transpose() - f).squaredNorm() / denom);
  return k;
}

Eigen::MatrixXd rbf_design(const Eigen::MatrixXd& train_features, const Eigen::MatrixXd& samples,
                           double h) {
  Eigen::MatrixXd X(train_features.rows() + 1, samples.rows());
  for (int s = 0; s < samples.rows(); ++s)
    X.col(s) = rbf_vector(train_features, samples.row(s).transpose(), h);
  return X;
}

BandwidthResult select_bandwidth(const Eigen::MatrixXd& train_features,
                                 const Eigen::MatrixXd& test_features) {
  if (train_features.rows() == 0 || test_features.rows() == 0)
    throw DataError("bandwidth selection needs nonempty train and test sets");
  if (train_features.cols() != test_features.cols())
    throw DataError("train and test feature dimensions differ");
  double sum = 0.0;
  for (int i = 0; i < train_features.rows(); ++i)
    for (int j = 0; j < test_features.rows(); ++j)
      sum += (train_features.row(i) - test_features.row(j)).norm();
  const double mean = sum / (static_cast<double>(train_features.rows()) * test_features.rows());
  if (!(mean > 0.0)) return {1.0, true};
  return {std::sqrt(mean), false};
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

Eigen::VectorXd mlr_posterior(const Regressor& reg, const Eigen::Ref<const Eigen::VectorXd>& f) {
  const Eigen::VectorXd k = rbf_vector(reg.train_features, f, reg.bandwidth);
  return softmax(reg.W.transpose() * k);
}

Eigen::MatrixXd mlr_posteriors(const Regressor& reg, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd out(samples.rows(), reg.num_classes());
  for (int s = 0; s < samples.rows(); ++s)
    out.row(s) = mlr_posterior(reg, samples.row(s).transpose()).transpose();
  return out;
}

namespace {

void check_problem(const Eigen::MatrixXd& X, const std::vector<Label>& y, const Eigen::MatrixXd& W) {
  if (X.cols() != static_cast<Eigen::Index>(y.size()))
    throw DataError("design matrix and label count differ");
  if (W.rows() != X.rows()) throw DataError("regressor and design matrix dimensions differ");
  for (Label l : y)
    if (l < 0 || l >= W.cols()) throw DataError("training label out of range");
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

}  // namespace

double mlr_neg_log_likelihood(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                              const Eigen::MatrixXd& W) {
  check_problem(X, y, W);
  const Eigen::MatrixXd logits = W.transpose() * X;  // N x q
  double total = 0.0;
  for (int i = 0; i < X.cols(); ++i) total += log_sum_exp(logits.col(i)) - logits(y[i], i);
  return total;
}

Eigen::MatrixXd mlr_gradient(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                             const Eigen::MatrixXd& W) {
  check_problem(X, y, W);
  const Eigen::MatrixXd logits = W.transpose() * X;
  Eigen::MatrixXd residual(W.cols(), X.cols());  // P - Y
  for (int i = 0; i < X.cols(); ++i) {
    residual.col(i) = softmax(logits.col(i));
    residual(y[i], i) -= 1.0;
  }
  Eigen::MatrixXd g = X * residual.transpose();
  g.col(g.cols() - 1).setZero();
  return g;
}

namespace {

/// 1/2 (I - 11^T / N) on the N - 1 free columns.
Eigen::MatrixXd boehning_block(int num_classes) {
  const int f = num_classes - 1;
  return 0.5 * (Eigen::MatrixXd::Identity(f, f) -
                Eigen::MatrixXd::Constant(f, f, 1.0 / num_classes));
}

}  // namespace

double mlr_surrogate(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                     const Eigen::MatrixXd& W, const Eigen::MatrixXd& Wt) {
  const int n = static_cast<int>(W.cols());
  const double f0 = mlr_neg_log_likelihood(X, y, Wt);
  const Eigen::MatrixXd g = mlr_gradient(X, y, Wt);
  const Eigen::MatrixXd delta = (W - Wt).leftCols(n - 1);
  const Eigen::MatrixXd R = X * X.transpose();
  const Eigen::MatrixXd A = boehning_block(n);
  const double linear = (g.leftCols(n - 1).array() * delta.array()).sum();
  const double quad = (delta.transpose() * R * delta * A).trace();
  return f0 + linear + 0.5 * quad;
}

double lorsal_objective(const Eigen::MatrixXd& X, const std::vector<Label>& y,
                        const Eigen::MatrixXd& W, double lambda) {
  return mlr_neg_log_likelihood(X, y, W) + lambda * W.cwiseAbs().sum();
}

int count_nonzero(const Eigen::MatrixXd& W, double tol) {
  return static_cast<int>((W.array().abs() > tol).count());
}

Eigen::MatrixXd lorsal_fit(const Eigen::MatrixXd& X, const std::vector<Label>& y, int num_classes,
                           const LorsalParams& params, LorsalTrace* trace) {
  if (X.cols() == 0 || y.empty()) throw DataError("empty training set");
  if (num_classes < 1) throw DataError("num_classes must be positive");
  if (params.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (!(params.mu > 0.0)) throw ConfigError("admm_mu must be > 0");
  const int d = static_cast<int>(X.rows());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, num_classes);
  check_problem(X, y, W);
  LorsalTrace local;
  LorsalTrace& tr = trace ? *trace : local;
  tr = {};
  double obj = lorsal_objective(X, y, W, params.lambda);
  tr.objective.push_back(obj);
  if (num_classes == 1) {
    tr.converged = true;
    return W;
  }

  // The curvature bound is fixed, so both factors are diagonalized once:
  // (A (x) R + mu I)^-1 acts on a d x (N-1) matrix M as
  // Ur [(Ur^T M Ua) ./ (r a^T + mu)] Ua^T.
  const int f = num_classes - 1;
  const Eigen::MatrixXd R = X * X.transpose();
  const Eigen::MatrixXd A = boehning_block(num_classes);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_r(R);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_a(A);
  const Eigen::MatrixXd& Ur = eig_r.eigenvectors();
  const Eigen::MatrixXd& Ua = eig_a.eigenvectors();
  const Eigen::MatrixXd denom =
      (eig_r.eigenvalues() * eig_a.eigenvalues().transpose()).array() + params.mu;
  const double shrink = params.lambda / params.mu;
  auto soft = [shrink](const Eigen::MatrixXd& v) {
    return v.unaryExpr([shrink](double x) {
      return x > shrink ? x - shrink : (x < -shrink ? x + shrink : 0.0);
    }).eval();
  };

  for (int outer = 0; outer < params.max_outer; ++outer) {
    const Eigen::MatrixXd Ut = W.leftCols(f);
    const Eigen::MatrixXd G = mlr_gradient(X, y, W).leftCols(f);
    const Eigen::MatrixXd anchor = R * Ut * A - G;
    Eigen::MatrixXd V = Ut;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(d, f);
    Eigen::MatrixXd candidate;
    double cand_obj = 0.0;
    // Extra rounds of inner iterations are granted when the inexact inner
    // solution fails to decrease the true objective.
    bool accepted = false;
    for (int round = 0; round < 5 && !accepted; ++round) {
      for (int inner = 0; inner < params.max_inner; ++inner) {
        const Eigen::MatrixXd M = anchor + params.mu * (V + D);
        const Eigen::MatrixXd U =
            Ur * ((Ur.transpose() * M * Ua).array() / denom.array()).matrix() * Ua.transpose();
        const Eigen::MatrixXd V_prev = V;
        V = soft(U - D);
        D -= U - V;
        const double scale = std::max(1.0, V.norm());
        if ((U - V).norm() <= params.inner_tol * scale &&
            (V - V_prev).norm() <= params.inner_tol * scale)
          break;
      }
      candidate = Eigen::MatrixXd::Zero(d, num_classes);
      candidate.leftCols(f) = V;
      cand_obj = lorsal_objective(X, y, candidate, params.lambda);
      if (!std::isfinite(cand_obj)) {
        std::ostringstream os;
        os << "LORSAL objective became non-finite at outer iteration " << outer
           << "; last finite W:\n"
           << W;
        throw NumericalError(os.str());
      }
      accepted = cand_obj <= obj;
    }
    ++tr.outer_iterations;
    if (!accepted) {
      tr.converged = true;
      break;
    }
    const double decrease = obj - cand_obj;
    W = candidate;
    obj = cand_obj;
    tr.objective.push_back(obj);
    if (decrease <= params.tol * std::max(1.0, std::abs(obj))) {
      tr.converged = true;
      break;
    }
  }
  return W;
}

Regressor lorsal_train(const TrainingSet& ts, double h, const LorsalParams& params,
                       LorsalTrace* trace) {
  if (ts.size() == 0) throw DataError("empty training set");
  Regressor reg;
  reg.train_features = ts.features;
  reg.bandwidth = h;
  reg.lambda = params.lambda;
  const Eigen::MatrixXd X = rbf_design(ts.features, ts.features, h);
  reg.W = lorsal_fit(X, ts.labels, ts.num_classes, params, trace);
  return reg;
}

namespace {

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << std::setprecision(17);
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("bad number in '" + path + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("ragged matrix in '" + path + "'");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace

void save_regressor(const std::string& prefix, const Regressor& reg, std::uint64_t seed) {
  write_matrix_csv(prefix + "_W.csv", reg.W);
  write_matrix_csv(prefix + "_train.csv", reg.train_features);
  std::ofstream meta(prefix + "_meta.txt");
  if (!meta) throw DataError("cannot write '" + prefix + "_meta.txt'");
  meta << std::setprecision(17) << "bandwidth = " << reg.bandwidth << "\nlambda = " << reg.lambda
       << "\nseed = " << seed << "\n";
}

Regressor load_regressor(const std::string& prefix) {
  Regressor reg;
  reg.W = read_matrix_csv(prefix + "_W.csv");
  reg.train_features = read_matrix_csv(prefix + "_train.csv");
  std::ifstream meta(prefix + "_meta.txt");
  if (!meta) throw DataError("cannot open '" + prefix + "_meta.txt'");
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(' ') + 1);
    const double value = std::stod(line.substr(eq + 1));
    if (key == "bandwidth") reg.bandwidth = value;
    if (key == "lambda") reg.lambda = value;
  }
  if (reg.W.rows() != reg.train_features.rows() + 1)
    throw DataError("regressor files are inconsistent");
  return reg;
}

}  // namespace ctxreject
