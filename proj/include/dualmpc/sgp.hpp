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

// Online sparse semi-parametric Gaussian-process regression.
//
// Each output dimension is an independent SubsystemGP
//
//   f(xi) = theta^T phi(xi) + r(xi),  r ~ GP(0, k),  theta ~ N(mu0, S0),
//
// stored in the reparameterised form alpha = K^-1 Y, beta = K^-1 Phi^T,
// C = K^-1 together with the Gaussian posterior over theta. The pool of
// stored inputs can grow by rank-one inclusion and shrink by RKHS-scored
// deletion without refactorising K. Deleting a point leaves the theta
// posterior untouched, so the parametric part keeps what it learned.

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dualmpc/basis.hpp"
#include "dualmpc/gaussmath.hpp"
#include "dualmpc/kernel.hpp"
#include "dualmpc/parallel.hpp"

namespace dualmpc {

struct ParametricPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  static ParametricPrior isotropic(int n_theta, double variance);
};

struct SubsystemGP {
  KernelParams kernel;
  BasisSpec basis;
  ParametricPrior prior;
  std::size_t budget = 0;

  Eigen::MatrixXd pool;    // n_xi x |pool|, one stored input per column
  Eigen::VectorXd labels;  // |pool|
  Eigen::VectorXd alpha;
  Eigen::MatrixXd beta;  // |pool| x n_theta
  Eigen::MatrixXd cmat;  // inverse Gram matrix
  Eigen::VectorXd theta_mean;
  Eigen::MatrixXd theta_cov;

  // alpha - beta * theta_mean, kept in sync by every update.
  Eigen::VectorXd mean_weights;

  Eigen::Index size() const { return pool.cols(); }
  int input_dim() const { return basis.input_dim; }
  void refresh();
};

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
};

SubsystemGP batch_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                      const KernelParams& kernel, const BasisSpec& basis,
                      const ParametricPrior& prior, std::size_t budget);

/// Predictive moments. The variance carries the observation noise once and
/// is floored at 1e-3 times the noise.
Prediction predict(const SubsystemGP& sub, const Eigen::VectorXd& x);

struct BatchPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/// predict() at every column of `inputs`, sharing one Gram product.
BatchPrediction predict_batch(const SubsystemGP& sub, const Eigen::MatrixXd& inputs);

/// Rank-one inclusion of (xi, y). Throws DegenerateInclusion if xi is
/// already stored or adds no new direction to the Gram matrix.
SubsystemGP include(SubsystemGP sub, const Eigen::VectorXd& xi, double y);

/// |alpha - beta mu_theta|_j / C_jj for every stored point.
Eigen::VectorXd elimination_scores(const SubsystemGP& sub);

/// Deletes pool entry m (0-based); theta posterior is left unchanged.
SubsystemGP remove(SubsystemGP sub, Eigen::Index m);

/// A + noise + lambda_max(S0) * phi_bar^2.
double variance_bound(const SubsystemGP& sub);

/// Lowest-score index, ties resolved toward the smallest index.
Eigen::Index lowest_score_index(const Eigen::VectorXd& scores);

struct ModelGP {
  std::vector<SubsystemGP> subsystems;

  int state_dim() const { return static_cast<int>(subsystems.size()); }
  int input_dim() const { return subsystems.empty() ? 0 : subsystems.front().input_dim(); }

  /// Per-dimension means and a diagonal covariance of predictive variances.
  MeanCov predict(const Eigen::VectorXd& xi) const;
  void validate() const;
};

ModelGP fit_model(const Eigen::MatrixXd& features, const Eigen::MatrixXd& next_states,
                  const std::vector<KernelParams>& kernels, const std::vector<BasisSpec>& bases,
                  const std::vector<ParametricPrior>& priors, std::size_t budget);

struct GpUpdateStats {
  int skipped = 0;  // dimensions left unchanged by a degenerate inclusion
  int removed = 0;
};

/// Includes (xi, x_next_i) in every dimension and, once a pool exceeds its
/// budget, deletes its lowest-score entry.
ModelGP gp_update(ModelGP model, const Eigen::VectorXd& xi, const Eigen::VectorXd& x_next,
                  GpUpdateStats* stats = nullptr, Execution exec = default_execution());

}  // namespace dualmpc
