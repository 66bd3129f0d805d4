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

#include "ctxreject/core.hpp"

namespace ctxreject {

/// Expected cost of every label in the extended set: entry k < N is
/// sum_j c(k, j) p_j and entry N is the rejection cost. Throws DataError
/// when p does not sum to one within 1e-9.
Eigen::VectorXd risk_vector(const Eigen::Ref<const Eigen::VectorXd>& p, const CostMatrix& cm);

/// One row of risks per posterior row (rows x (N + 1)).
Eigen::MatrixXd risk_table(const Eigen::MatrixXd& posteriors, const CostMatrix& cm);

/// Threshold rule for 0/1 costs: the most probable class when its
/// probability strictly exceeds 1 - rho, the reject label otherwise.
Label map_with_rejection(const Eigen::Ref<const Eigen::VectorXd>& p, double rho);

/// Index of the smallest entry, smallest index on ties.
Label argmin_label(const Eigen::Ref<const Eigen::VectorXd>& values);
Label argmax_label(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace ctxreject
