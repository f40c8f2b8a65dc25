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

// Gaussian beliefs and fifth-degree sigma-point integration.

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dualmpc/parallel.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GaussianBelief {
  VectorXd mean;
  MatrixXd cov;

  GaussianBelief() = default;
  GaussianBelief(VectorXd m, MatrixXd c) : mean(std::move(m)), cov(std::move(c)) {}

  static GaussianBelief point(const VectorXd& m) {
    return {m, MatrixXd::Zero(m.size(), m.size())};
  }
  Eigen::Index dim() const { return mean.size(); }
};

/// Unit sigma points (columns of `points`) and their weights for N(0, I).
struct SigmaPointSet {
  int dim = 0;
  MatrixXd points;  // dim x N
  VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
};

/// Fully symmetric degree-5 rule with 2n^2 + 1 points. Weights go negative
/// for n > 4.
SigmaPointSet ut5_unit_points(int n);

/// Largest |rule moment - E[prod x_d^k_d]| over all monomials of each total
/// degree 0..max_degree under N(0, I).
std::vector<double> moment_errors(const SigmaPointSet& sp, int max_degree);

struct CholeskyResult {
  MatrixXd lower;
  double jitter = 0.0;
};

/// Lower Cholesky factor of cov + jitter * I, with jitter taken from the
/// ladder {0, 1e-12, 1e-10, ..., 1e-4}. Throws NotPositiveSemidefinite.
CholeskyResult chol_psd(const MatrixXd& cov);

/// (C + C^T) / 2, then eigenvalues below -1e-10 are clipped to zero.
MatrixXd symmetrize_clip(const MatrixXd& cov);

/// mu + L * eps_n for every sigma point.
MatrixXd sigma_points_for(const GaussianBelief& belief, const SigmaPointSet& sp,
                          const MatrixXd& sqrt_cov);

/// Mean and covariance of f at one evaluation point.
struct MeanCov {
  VectorXd mean;
  MatrixXd cov;
};

using MeanCovFn = std::function<MeanCov(const VectorXd&)>;

/// Function values at every sigma point of a belief.
struct SigmaEvaluation {
  MatrixXd points;  // absolute evaluation points, one per column
  std::vector<MeanCov> values;
};

/// Evaluates fn at the sigma points of `belief`. The evaluations are
/// independent and run under `exec`.
SigmaEvaluation evaluate_at_sigma_points(const MeanCovFn& fn, const GaussianBelief& belief,
                                         const SigmaPointSet& sp,
                                         Execution exec = default_execution());

/// Moment-matched Gaussian from cached evaluations (ascending-index sums).
GaussianBelief moment_match_from(const SigmaEvaluation& eval, const SigmaPointSet& sp);

GaussianBelief moment_match(const MeanCovFn& fn, const GaussianBelief& belief,
                            const SigmaPointSet& sp, Execution exec = default_execution());

GaussianBelief moment_match(const std::function<VectorXd(const VectorXd&)>& mean_fn,
                            const std::function<MatrixXd(const VectorXd&)>& cov_fn,
                            const GaussianBelief& belief, const SigmaPointSet& sp,
                            Execution exec = default_execution());

/// Sigma-point estimate of E[g(xi)] under `belief`.
double expectation(const std::function<double(const VectorXd&)>& g,
                   const GaussianBelief& belief, const SigmaPointSet& sp,
                   Execution exec = default_execution());

}  // namespace dualmpc
