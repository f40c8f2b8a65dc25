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

// Type-II maximum likelihood for the kernel and basis hyperparameters.

#pragma once

#include <Eigen/Dense>

#include "dualmpc/basis.hpp"
#include "dualmpc/kernel.hpp"
#include "dualmpc/sgp.hpp"

namespace dualmpc {

/// -log N(Y; Phi^T mu0, K + Phi^T S0 Phi), theta integrated out.
/// Returns +inf when the covariance cannot be factorised.
double marginal_nll(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                    const KernelParams& kernel, const BasisSpec& basis,
                    const ParametricPrior& prior);

struct TuneOptions {
  int steps = 200;
  double fd_step = 1e-5;  // central-difference step in log space
  double initial_rate = 0.5;
  bool tune_basis = true;
};

struct TuneResult {
  KernelParams kernel;
  BasisSpec basis;
  double initial_nll = 0.0;
  double nll = 0.0;
  int accepted_steps = 0;
};

/// Normalised-gradient descent with an adaptive step on the log-positive
/// hyperparameters (amplitude, W diagonal, noise, rbf lengths, Fourier
/// frequencies; the Fourier projection is tuned unconstrained). Every
/// accepted step lowers the NLL, and the best parameters seen are returned.
TuneResult tune(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                const KernelParams& kernel, const BasisSpec& basis, const ParametricPrior& prior,
                const TuneOptions& options = {});

}  // namespace dualmpc
