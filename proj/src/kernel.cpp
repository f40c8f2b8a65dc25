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

#include "dualmpc/kernel.hpp"

#include <cmath>

#include "dualmpc/errors.hpp"

namespace dualmpc {

void KernelParams::validate(Eigen::Index input_dim) const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw ConfigError("kernel amplitude must be positive");
  if (!(noise > 0.0) || !std::isfinite(noise)) throw ConfigError("kernel noise must be positive");
  if (w_diag.size() != input_dim) throw DimensionError("kernel W has the wrong dimension");
  if (!w_diag.allFinite() || (w_diag.array() <= 0.0).any())
    throw ConfigError("kernel W entries must be positive");
}

double kernel_eval(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& p,
                   bool same_index) {
  if (a.size() != b.size() || a.size() != p.w_diag.size())
    throw DimensionError("kernel_eval: dimension mismatch");
  const double d2 = ((a - b).array().square() / p.w_diag.array()).sum();
  return p.amplitude * std::exp(-0.5 * d2) + (same_index ? p.noise : 0.0);
}

Eigen::VectorXd kernel_column(const Eigen::MatrixXd& pool, const Eigen::VectorXd& x,
                              const KernelParams& p) {
  if (pool.cols() > 0 && pool.rows() != x.size())
    throw DimensionError("kernel_column: dimension mismatch");
  const Eigen::ArrayXd inv_w = p.w_diag.array().inverse();
  Eigen::VectorXd k(pool.cols());
  for (Eigen::Index j = 0; j < pool.cols(); ++j) {
    const double d2 = ((pool.col(j) - x).array().square() * inv_w).sum();
    k(j) = p.amplitude * std::exp(-0.5 * d2);
  }
  return k;
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& pool, const KernelParams& p) {
  const Eigen::Index n = pool.cols();
  const Eigen::ArrayXd inv_w = p.w_diag.array().inverse();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = p.amplitude + p.noise;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d2 = ((pool.col(i) - pool.col(j)).array().square() * inv_w).sum();
      k(i, j) = k(j, i) = p.amplitude * std::exp(-0.5 * d2);
    }
  }
  return k;
}

}  // namespace dualmpc
