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

// Stochastic Fourier-Hermite dynamic programming over Gaussian beliefs.

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dualmpc/gaussmath.hpp"

namespace dualmpc {

/// x' ~ N(f(xi), Sigma_f(xi)) with xi = (x, u).
struct DynamicsModel {
  int n_x = 0;
  int n_u = 0;
  MeanCovFn eval;
};

/// Stage cost at a local horizon index. The dynamics output at xi is passed
/// along so costs that depend on predictive variances do not re-evaluate it.
using StageCostFn = std::function<double(int k, const VectorXd& xi, const MeanCov& dyn_at_xi)>;
using TerminalCostFn = std::function<double(const VectorXd& x)>;

struct CostFunctions {
  StageCostFn stage;
  TerminalCostFn terminal;
};

struct QuadraticValue {
  double v0 = 0.0;
  VectorXd vx;
  MatrixXd vxx;
  GaussianBelief anchor;
};

struct QuadraticQ {
  double q0 = 0.0;
  VectorXd qx;
  VectorXd qu;
  MatrixXd qxx;
  MatrixXd quu;
  MatrixXd qux;  // n_u x n_x
  GaussianBelief anchor;
};

struct PolicyStep {
  VectorXd kff;
  MatrixXd Kfb;
  VectorXd x_anchor;
  VectorXd u_anchor;
};

/// u_k(x) = u_anchor + kff + Kfb (x - x_anchor).
struct Policy {
  std::vector<PolicyStep> steps;

  int horizon() const { return static_cast<int>(steps.size()); }
  VectorXd action(int k, const VectorXd& x) const;
};

/// Dynamics outputs and stage costs at the sigma points of one step.
struct StepEvaluation {
  SigmaEvaluation dyn;
  VectorXd stage;
};

struct NominalTrajectory {
  int n_x = 0;
  int n_u = 0;
  std::vector<GaussianBelief> beliefs;  // H + 1 beliefs over xi
  std::vector<StepEvaluation> cache;    // H entries after a forward pass, else empty

  int horizon() const { return beliefs.empty() ? 0 : static_cast<int>(beliefs.size()) - 1; }
  VectorXd x_mean(int k) const { return beliefs[static_cast<std::size_t>(k)].mean.head(n_x); }
  VectorXd u_mean(int k) const { return beliefs[static_cast<std::size_t>(k)].mean.tail(n_u); }
  MatrixXd x_cov(int k) const { return beliefs[static_cast<std::size_t>(k)].cov.topLeftCorner(n_x, n_x); }
};

struct SolverOptions {
  int max_iters = 100;
  double tol = 1e-4;
  double reg0 = 0.0;
  int line_search_steps = 8;
  bool deterministic_mode = false;
  // Variance added to the action block of each belief before placing sigma
  // points. Given x, the propagated action is deterministic, so the action
  // block of the whitened quadrature is scaled by this floor alone; values
  // much below 1e-4 let the rule's degree-6 error swamp Q_uu.
  double action_cov_floor = 1e-3;
  Execution exec = default_execution();
};

/// c(xi) + 1/2 tr(Sigma_f vxx) + vx^T d + 1/2 d^T vxx d + v0, d = f(xi) - anchor mean.
double q_eval(double stage_value, const MeanCov& dyn_at_xi, const QuadraticValue& next_value);
double q_eval(int k, const VectorXd& xi, const StageCostFn& stage, const QuadraticValue& next_value,
              const DynamicsModel& dyn);

struct QuadraticFit {
  double c0 = 0.0;
  VectorXd grad;
  MatrixXd hess;
};

/// Gaussian-weighted least-squares quadratic from values at the sigma points
/// mu + L eps_n of `belief`.
QuadraticFit quadratic_fit_from_values(const VectorXd& values, const MatrixXd& lower,
                                       const MatrixXd& cov, const SigmaPointSet& sp);

QuadraticQ fh_quadratize(const std::function<double(const VectorXd&)>& eval_fn,
                         const GaussianBelief& belief, const SigmaPointSet& sp, int n_x,
                         Execution exec = default_execution());

QuadraticValue terminal_value(const TerminalCostFn& terminal, const GaussianBelief& belief_x,
                              const SigmaPointSet& sp_x, Execution exec = default_execution());

struct Gains {
  VectorXd kff;
  MatrixXd Kfb;
  MatrixXd quu_reg;
  double lambda = 0.0;
};

Gains gains(const QuadraticQ& q, double reg);

QuadraticValue value_update(const QuadraticQ& q, const VectorXd& kff, const MatrixXd& Kfb,
                            const MatrixXd& quu);

/// Belief used to place sigma points at step k: the nominal belief with the
/// action floor added to the u block.
GaussianBelief quadrature_belief(const GaussianBelief& belief, int n_x, double action_cov_floor);

struct BackwardResult {
  Policy policy;
  double max_lambda = 0.0;
};

BackwardResult backward_pass(const NominalTrajectory& nominal, const DynamicsModel& dyn,
                             const CostFunctions& costs, const SolverOptions& opts, double reg);

/// Propagates `init` under `policy` (feedforward scaled by `alpha`) and fills
/// the evaluation cache. Deviations are taken from the policy's anchors.
NominalTrajectory forward_pass(const Policy& policy, const DynamicsModel& dyn,
                               const CostFunctions& costs,
                               const GaussianBelief& init, const SolverOptions& opts,
                               double alpha = 1.0);

/// Sum of per-step expected stage costs plus the expected terminal cost.
double stochastic_objective(const NominalTrajectory& nominal, const CostFunctions& costs,
                            const DynamicsModel& dyn, const SolverOptions& opts);

/// Zero-gain policy anchored on the nominal means with the given actions.
Policy open_loop_policy(const MatrixXd& actions, int n_x);

/// Rolls `actions` (H x n_u) forward from `init`.
NominalTrajectory initial_nominal(const GaussianBelief& init, const MatrixXd& actions,
                                  const DynamicsModel& dyn, const CostFunctions& costs,
                                  const SolverOptions& opts);

struct HistoryRow {
  int iteration = 0;
  double objective = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double wall_ms = 0.0;
};

struct SolveResult {
  Policy policy;
  NominalTrajectory nominal;
  std::vector<HistoryRow> history;
  int iterations = 0;  // accepted steps that changed the objective by at least tol
  bool converged = false;
  bool stalled = false;

  MatrixXd actions() const;  // nominal action means, H x n_u
};

/// `initial_actions` (H x n_u) seeds the nominal; zeros when absent.
SolveResult solve(const GaussianBelief& init, const DynamicsModel& dyn, const CostFunctions& costs,
                  int horizon, const SolverOptions& opts,
                  const std::optional<MatrixXd>& initial_actions = std::nullopt);

/// Shift-and-repeat warm start from a previous solution.
MatrixXd shift_actions(const MatrixXd& actions);

}  // namespace dualmpc
