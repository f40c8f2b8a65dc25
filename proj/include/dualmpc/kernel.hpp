/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <Eigen/Dense>

namespace dualmpc {

/// Squared-exponential kernel hyperparameters. `w_diag` holds the diagonal
/// of W, so the distance is sum_i (a_i - b_i)^2 / w_diag_i.
struct KernelParams {
  double amplitude = 1.0;
  Eigen::VectorXd w_diag;
  double noise = 1e-2;

  void validate(Eigen::Index input_dim) const;
};

/// A * exp(-0.5 |a - b|^2_{W^-1}) + noise * [same_index]. `same_index` marks
/// a Gram-matrix diagonal entry, never a cross-covariance.
double kernel_eval(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& p,
                   bool same_index);

/// Noise-free cross-covariances k(pool_j, x) for every pool column.
Eigen::VectorXd kernel_column(const Eigen::MatrixXd& pool, const Eigen::VectorXd& x,
                              const KernelParams& p);

/// Gram matrix of the pool columns, noise on the diagonal.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& pool, const KernelParams& p);

}  // namespace dualmpc
