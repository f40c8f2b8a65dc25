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

// Task cost and the information-gain exploration term.

#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "dualmpc/sgp.hpp"

namespace dualmpc {

/// (x - ref_k)^T W (x - ref_k) + u^T R u per stage, W_H at the end of the
/// horizon. `reference` is indexed by absolute time step.
struct QuadraticCostSpec {
  Eigen::MatrixXd W;
  Eigen::MatrixXd R;
  Eigen::MatrixXd W_H;
  std::function<Eigen::VectorXd(int)> reference;

  int state_dim() const { return static_cast<int>(W.rows()); }
  int action_dim() const { return static_cast<int>(R.rows()); }
  void validate() const;
};

double stage_cost(const QuadraticCostSpec& spec, const Eigen::VectorXd& xi, int k);
double terminal_cost(const QuadraticCostSpec& spec, const Eigen::VectorXd& x, int k);

enum class ExplorationMode { kOff, kFull, kParametric };

std::string to_string(ExplorationMode mode);
ExplorationMode exploration_mode_from_string(const std::string& name);

struct ExplorationSpec {
  double gamma = 0.0;
  ExplorationMode mode = ExplorationMode::kOff;
  double offset = 0.0;  // c_bar, filled by make_exploration

  bool active() const { return mode != ExplorationMode::kOff; }
};

/// Builds the spec and caches the offset for `model`:
///   full        c_bar = 1/2 sum_i ln(1 + bound_i / noise_i)
///   parametric  c_bar = 1/2 sum_i ln(1 + lambda_max(S0_i) phi_bar_i^2)
ExplorationSpec make_exploration(const ModelGP& model, double gamma, ExplorationMode mode);

double exploration_offset(const ModelGP& model, ExplorationMode mode);

/// -1/2 sum_i ln(1 + Sigma_i / noise_i) where Sigma_i is the predictive
/// variance with the observation noise taken out (full mode), or
/// -1/2 sum_i ln(1 + phi_i^T S_theta_i phi_i) (parametric mode).
double exploration_cost(const ModelGP& model, const Eigen::VectorXd& xi, ExplorationMode mode);

/// Full-mode exploration cost from already computed predictive variances
/// (noise included), as returned by ModelGP::predict.
double exploration_cost_from_variances(const ModelGP& model, const Eigen::VectorXd& predictive_var);

/// c(xi) + gamma (c_exp(xi) + c_bar); plain c(xi) when exploration is off.
double efe_stage_cost(const QuadraticCostSpec& spec, const ExplorationSpec& expl,
                      const ModelGP& model, const Eigen::VectorXd& xi, int k);

}  // namespace dualmpc
