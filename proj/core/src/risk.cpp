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

#include "ctxreject/risk.hpp"

#include <cmath>

#include "ctxreject/errors.hpp"

namespace ctxreject {

Eigen::VectorXd risk_vector(const Eigen::Ref<const Eigen::VectorXd>& p, const CostMatrix& cm) {
  const int n = cm.num_classes();
  if (p.size() != n) throw DataError("posterior length does not match the number of classes");
  if (!(std::abs(p.sum() - 1.0) <= 1e-9)) throw DataError("posterior does not sum to one");
  Eigen::VectorXd r = cm.entries() * p;
  r(n) = cm.rho();
  return r;
}

Eigen::MatrixXd risk_table(const Eigen::MatrixXd& posteriors, const CostMatrix& cm) {
  Eigen::MatrixXd out(posteriors.rows(), cm.num_classes() + 1);
  for (int i = 0; i < posteriors.rows(); ++i)
    out.row(i) = risk_vector(posteriors.row(i).transpose(), cm).transpose();
  return out;
}

Label argmin_label(const Eigen::Ref<const Eigen::VectorXd>& values) {
  Label best = 0;
  for (int k = 1; k < values.size(); ++k)
    if (values(k) < values(best)) best = k;
  return best;
}

Label argmax_label(const Eigen::Ref<const Eigen::VectorXd>& values) {
  Label best = 0;
  for (int k = 1; k < values.size(); ++k)
    if (values(k) > values(best)) best = k;
  return best;
}

Label map_with_rejection(const Eigen::Ref<const Eigen::VectorXd>& p, double rho) {
  const Label best = argmax_label(p);
  return p(best) > 1.0 - rho ? best : static_cast<Label>(p.size());
}

}  // namespace ctxreject
