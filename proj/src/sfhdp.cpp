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

#include "dualmpc/sfhdp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "dualmpc/errors.hpp"

namespace dualmpc {

namespace {

constexpr double kMinCurvature = 1e-9;
constexpr double kLambdaCap = 1e6;
constexpr int kMaxFailures = 3;

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

VectorXd join(const VectorXd& x, const VectorXd& u) {
  VectorXd xi(x.size() + u.size());
  xi << x, u;
  return xi;
}

void check_dims(const DynamicsModel& dyn) {
  if (dyn.n_x < 1 || dyn.n_u < 1) throw DimensionError("dynamics needs n_x >= 1 and n_u >= 1");
  if (!dyn.eval) throw ConfigError("dynamics model has no evaluation function");
}

StepEvaluation evaluate_step(int k, const GaussianBelief& quad, const MatrixXd& lower,
                             const SigmaPointSet& sp, const DynamicsModel& dyn, const StageCostFn& stage,
                             Execution exec) {
  StepEvaluation out;
  out.dyn.points = sigma_points_for(quad, sp, lower);
  const auto n = sp.size();
  out.dyn.values.resize(static_cast<std::size_t>(n));
  out.stage.resize(n);
  for_each_index(n, exec, [&](std::ptrdiff_t i) {
    const VectorXd xi = out.dyn.points.col(i);
    MeanCov mc = dyn.eval(xi);
    if (!mc.mean.allFinite() || !mc.cov.allFinite())
      throw NumericalError("non-finite dynamics output at step " + std::to_string(k));
    out.stage(i) = stage(k, xi, mc);
    out.dyn.values[static_cast<std::size_t>(i)] = std::move(mc);
  });
  return out;
}

// Feedforward scaled by alpha; feedback moved from `previous` toward `fresh`
// by beta. The previous policy reproduces the current nominal exactly, so
// alpha = beta = 0 gives back the current trajectory and its covariances.
Policy blend(Policy fresh, const Policy& previous, double alpha, double beta) {
  for (std::size_t k = 0; k < fresh.steps.size(); ++k) {
    auto& s = fresh.steps[k];
    s.kff *= alpha;
    if (beta < 1.0) s.Kfb = previous.steps[k].Kfb + beta * (s.Kfb - previous.steps[k].Kfb);
  }
  return fresh;
}

}  // namespace

VectorXd Policy::action(int k, const VectorXd& x) const {
  const auto& s = steps.at(static_cast<std::size_t>(k));
  return s.u_anchor + s.kff + s.Kfb * (x - s.x_anchor);
}

double q_eval(double stage_value, const MeanCov& dyn_at_xi, const QuadraticValue& next_value) {
  const VectorXd d = dyn_at_xi.mean - next_value.anchor.mean;
  return stage_value + 0.5 * (dyn_at_xi.cov.cwiseProduct(next_value.vxx)).sum() + next_value.vx.dot(d) +
         0.5 * d.dot(next_value.vxx * d) + next_value.v0;
}

double q_eval(int k, const VectorXd& xi, const StageCostFn& stage, const QuadraticValue& next_value,
              const DynamicsModel& dyn) {
  const MeanCov mc = dyn.eval(xi);
  if (!mc.mean.allFinite() || !mc.cov.allFinite()) throw NumericalError("non-finite dynamics output");
  return q_eval(stage(k, xi, mc), mc, next_value);
}

QuadraticFit quadratic_fit_from_values(const VectorXd& values, const MatrixXd& lower, const MatrixXd& cov,
                                       const SigmaPointSet& sp) {
  const auto n = sp.dim;
  // Offsetting by the center value leaves the fit unchanged (the weights sum
  // to one and E[ee^T - I] = 0) but keeps the sums small.
  const double center = values(0);
  VectorXd g = VectorXd::Zero(n);
  MatrixXd h = MatrixXd::Zero(n, n);
  double mean_dev = 0.0;
  for (Eigen::Index i = 0; i < sp.size(); ++i) {
    const double wq = sp.weights(i) * (values(i) - center);
    const auto e = sp.points.col(i);
    mean_dev += wq;
    g += wq * e;
    h.noalias() += wq * (e * e.transpose());
    h.diagonal().array() -= wq;
  }
  const auto upper = lower.transpose().triangularView<Eigen::Upper>();
  QuadraticFit fit;
  fit.grad = upper.solve(g);
  const MatrixXd m = upper.solve(h);  // L^-T H~
  fit.hess = sym(upper.solve(m.transpose()).transpose());
  fit.c0 = center + mean_dev - 0.5 * (fit.hess.cwiseProduct(cov)).sum();
  return fit;
}

QuadraticQ fh_quadratize(const std::function<double(const VectorXd&)>& eval_fn, const GaussianBelief& belief,
                         const SigmaPointSet& sp, int n_x, Execution exec) {
  if (belief.dim() != sp.dim) throw DimensionError("fh_quadratize: sigma set dimension mismatch");
  if (n_x < 0 || n_x > sp.dim) throw DimensionError("fh_quadratize: bad state dimension");
  const auto chol = chol_psd(belief.cov);
  const MatrixXd pts = sigma_points_for(belief, sp, chol.lower);
  VectorXd vals(sp.size());
  for_each_index(sp.size(), exec, [&](std::ptrdiff_t i) { vals(i) = eval_fn(pts.col(i)); });
  if (!vals.allFinite()) throw NumericalError("fh_quadratize: non-finite function value");
  const auto fit = quadratic_fit_from_values(vals, chol.lower, belief.cov, sp);
  const int n_u = sp.dim - n_x;
  QuadraticQ q;
  q.q0 = fit.c0;
  q.qx = fit.grad.head(n_x);
  q.qu = fit.grad.tail(n_u);
  q.qxx = fit.hess.topLeftCorner(n_x, n_x);
  q.quu = fit.hess.bottomRightCorner(n_u, n_u);
  q.qux = fit.hess.bottomLeftCorner(n_u, n_x);
  q.anchor = belief;
  return q;
}

QuadraticValue terminal_value(const TerminalCostFn& terminal, const GaussianBelief& belief_x,
                              const SigmaPointSet& sp_x, Execution exec) {
  const auto q = fh_quadratize(terminal, belief_x, sp_x, static_cast<int>(belief_x.dim()), exec);
  return {q.q0, q.qx, q.qxx, belief_x};
}

Gains gains(const QuadraticQ& q, double reg) {
  if (!(reg >= 0.0)) throw ConfigError("regularization must be non-negative");
  const MatrixXd quu = sym(q.quu);
  double lambda = reg;
  while (lambda <= kLambdaCap) {
    MatrixXd quu_reg = quu;
    quu_reg.diagonal().array() += lambda;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(quu_reg, Eigen::EigenvaluesOnly);
    if (quu_reg.allFinite() && es.eigenvalues().minCoeff() >= kMinCurvature) {
      Eigen::LLT<MatrixXd> llt(quu_reg);
      Gains out;
      out.kff = -llt.solve(q.qu);
      out.Kfb = -llt.solve(q.qux);
      out.quu_reg = std::move(quu_reg);
      out.lambda = lambda;
      if (out.kff.allFinite() && out.Kfb.allFinite()) return out;
    }
    lambda = lambda == 0.0 ? 1e-8 : 10.0 * lambda;
  }
  throw IllConditionedQ("Q_uu could not be regularized to positive definite", -1);
}

QuadraticValue value_update(const QuadraticQ& q, const VectorXd& kff, const MatrixXd& Kfb, const MatrixXd& quu) {
  QuadraticValue v;
  const VectorXd quu_k = quu * kff;
  v.v0 = q.q0 - 0.5 * kff.dot(quu_k);
  v.vx = q.qx - Kfb.transpose() * quu_k;
  v.vxx = sym(q.qxx - Kfb.transpose() * quu * Kfb);
  const auto n_x = q.qx.size();
  v.anchor = GaussianBelief(q.anchor.mean.head(n_x), q.anchor.cov.topLeftCorner(n_x, n_x));
  return v;
}

GaussianBelief quadrature_belief(const GaussianBelief& belief, int n_x, double action_cov_floor) {
  GaussianBelief out = belief;
  const auto n_u = belief.dim() - n_x;
  if (action_cov_floor > 0.0) out.cov.bottomRightCorner(n_u, n_u).diagonal().array() += action_cov_floor;
  return out;
}

BackwardResult backward_pass(const NominalTrajectory& nominal, const DynamicsModel& dyn, const CostFunctions& costs,
                             const SolverOptions& opts, double reg) {
  check_dims(dyn);
  const int H = nominal.horizon();
  BackwardResult out;
  out.max_lambda = reg;
  if (H == 0) return out;
  const int nx = nominal.n_x;
  const auto sp_x = ut5_unit_points(nx);
  const auto sp = ut5_unit_points(nx + nominal.n_u);
  const bool cached = nominal.cache.size() == static_cast<std::size_t>(H);

  QuadraticValue value = terminal_value(
      costs.terminal, GaussianBelief(nominal.x_mean(H), nominal.x_cov(H)), sp_x, opts.exec);
  out.policy.steps.resize(static_cast<std::size_t>(H));
  for (int k = H - 1; k >= 0; --k) {
    const auto quad = quadrature_belief(nominal.beliefs[static_cast<std::size_t>(k)], nx, opts.action_cov_floor);
    const auto chol = chol_psd(quad.cov);
    StepEvaluation fresh;
    const StepEvaluation* ev = nullptr;
    if (cached) {
      ev = &nominal.cache[static_cast<std::size_t>(k)];
    } else {
      fresh = evaluate_step(k, quad, chol.lower, sp, dyn, costs.stage, opts.exec);
      ev = &fresh;
    }
    VectorXd qv(sp.size());
    for (Eigen::Index i = 0; i < sp.size(); ++i)
      qv(i) = q_eval(ev->stage(i), ev->dyn.values[static_cast<std::size_t>(i)], value);
    const auto fit = quadratic_fit_from_values(qv, chol.lower, quad.cov, sp);
    QuadraticQ q;
    q.q0 = fit.c0;
    q.qx = fit.grad.head(nx);
    q.qu = fit.grad.tail(nominal.n_u);
    q.qxx = fit.hess.topLeftCorner(nx, nx);
    q.quu = fit.hess.bottomRightCorner(nominal.n_u, nominal.n_u);
    q.qux = fit.hess.bottomLeftCorner(nominal.n_u, nx);
    q.anchor = quad;
    Gains g;
    try {
      g = gains(q, reg);
    } catch (const IllConditionedQ& e) {
      throw IllConditionedQ("Q_uu could not be regularized at step " + std::to_string(k), k);
    }
    out.max_lambda = std::max(out.max_lambda, g.lambda);
    auto& step = out.policy.steps[static_cast<std::size_t>(k)];
    step.kff = g.kff;
    step.Kfb = g.Kfb;
    step.x_anchor = nominal.x_mean(k);
    step.u_anchor = nominal.u_mean(k);
    value = value_update(q, g.kff, g.Kfb, g.quu_reg);
    value.anchor = GaussianBelief(nominal.x_mean(k), nominal.x_cov(k));
  }
  return out;
}

NominalTrajectory forward_pass(const Policy& policy, const DynamicsModel& dyn, const CostFunctions& costs,
                               const GaussianBelief& init, const SolverOptions& opts, double alpha) {
  check_dims(dyn);
  const int nx = dyn.n_x;
  const int nu = dyn.n_u;
  if (init.dim() != nx) throw DimensionError("forward_pass: initial belief dimension mismatch");
  const int H = policy.horizon();
  const auto sp = ut5_unit_points(nx + nu);

  NominalTrajectory out;
  out.n_x = nx;
  out.n_u = nu;
  out.beliefs.reserve(static_cast<std::size_t>(H) + 1);
  out.cache.reserve(static_cast<std::size_t>(H));
  VectorXd mx = init.mean;
  MatrixXd sx = init.cov;
  for (int k = 0; k < H; ++k) {
    const auto& s = policy.steps[static_cast<std::size_t>(k)];
    const VectorXd u = s.u_anchor + alpha * s.kff + s.Kfb * (mx - s.x_anchor);
    MatrixXd cov(nx + nu, nx + nu);
    const MatrixXd sk = sx * s.Kfb.transpose();
    cov.topLeftCorner(nx, nx) = sx;
    cov.topRightCorner(nx, nu) = sk;
    cov.bottomLeftCorner(nu, nx) = sk.transpose();
    cov.bottomRightCorner(nu, nu) = sym(s.Kfb * sk);
    GaussianBelief b(join(mx, u), std::move(cov));

    const auto quad = quadrature_belief(b, nx, opts.action_cov_floor);
    const auto chol = chol_psd(quad.cov);
    out.cache.push_back(evaluate_step(k, quad, chol.lower, sp, dyn, costs.stage, opts.exec));
    if (opts.deterministic_mode) {
      const MeanCov mc = dyn.eval(b.mean);
      if (!mc.mean.allFinite()) throw NumericalError("non-finite dynamics output at step " + std::to_string(k));
      mx = mc.mean;
      sx = init.cov;
    } else {
      const auto next = moment_match_from(out.cache.back().dyn, sp);
      mx = next.mean;
      sx = next.cov;
    }
    out.beliefs.push_back(std::move(b));
  }
  MatrixXd cov = MatrixXd::Zero(nx + nu, nx + nu);
  cov.topLeftCorner(nx, nx) = sx;
  out.beliefs.emplace_back(join(mx, VectorXd::Zero(nu)), std::move(cov));
  return out;
}

double stochastic_objective(const NominalTrajectory& nominal, const CostFunctions& costs, const DynamicsModel& dyn,
                            const SolverOptions& opts) {
  const int H = nominal.horizon();
  const auto sp_x = ut5_unit_points(nominal.n_x);
  const auto sp = ut5_unit_points(nominal.n_x + nominal.n_u);
  const bool cached = nominal.cache.size() == static_cast<std::size_t>(H);
  double total = 0.0;
  for (int k = 0; k < H; ++k) {
    StepEvaluation fresh;
    const StepEvaluation* ev = nullptr;
    if (cached) {
      ev = &nominal.cache[static_cast<std::size_t>(k)];
    } else {
      const auto quad = quadrature_belief(nominal.beliefs[static_cast<std::size_t>(k)], nominal.n_x,
                                          opts.action_cov_floor);
      fresh = evaluate_step(k, quad, chol_psd(quad.cov).lower, sp, dyn, costs.stage, opts.exec);
      ev = &fresh;
    }
    for (Eigen::Index i = 0; i < sp.size(); ++i) total += sp.weights(i) * ev->stage(i);
  }
  if (!nominal.beliefs.empty())
    total += expectation(costs.terminal, GaussianBelief(nominal.x_mean(H), nominal.x_cov(H)), sp_x, opts.exec);
  return total;
}

Policy open_loop_policy(const MatrixXd& actions, int n_x) {
  Policy p;
  const auto n_u = actions.cols();
  for (Eigen::Index k = 0; k < actions.rows(); ++k)
    p.steps.push_back({VectorXd::Zero(n_u), MatrixXd::Zero(n_u, n_x), VectorXd::Zero(n_x), actions.row(k).transpose()});
  return p;
}

NominalTrajectory initial_nominal(const GaussianBelief& init, const MatrixXd& actions, const DynamicsModel& dyn,
                                  const CostFunctions& costs, const SolverOptions& opts) {
  if (actions.cols() != dyn.n_u) throw DimensionError("initial actions must have n_u columns");
  return forward_pass(open_loop_policy(actions, dyn.n_x), dyn, costs, init, opts);
}

MatrixXd SolveResult::actions() const {
  const int H = nominal.horizon();
  MatrixXd a(H, nominal.n_u);
  for (int k = 0; k < H; ++k) a.row(k) = nominal.u_mean(k).transpose();
  return a;
}

MatrixXd shift_actions(const MatrixXd& actions) {
  if (actions.rows() == 0) return actions;
  MatrixXd out(actions.rows(), actions.cols());
  out.topRows(actions.rows() - 1) = actions.bottomRows(actions.rows() - 1);
  out.row(actions.rows() - 1) = actions.row(actions.rows() - 1);
  return out;
}

SolveResult solve(const GaussianBelief& init, const DynamicsModel& dyn, const CostFunctions& costs, int horizon,
                  const SolverOptions& opts, const std::optional<MatrixXd>& initial_actions) {
  check_dims(dyn);
  if (!(opts.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (horizon < 0) throw ConfigError("horizon must be non-negative");
  if (opts.line_search_steps < 1) throw ConfigError("line_search_steps must be at least 1");
  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  MatrixXd actions = initial_actions ? *initial_actions : MatrixXd::Zero(horizon, dyn.n_u);
  if (actions.rows() != horizon) throw DimensionError("initial actions must have one row per stage");

  SolveResult res;
  auto t0 = Clock::now();
  res.nominal = initial_nominal(init, actions, dyn, costs, opts);
  double J = stochastic_objective(res.nominal, costs, dyn, opts);
  if (!std::isfinite(J)) throw NumericalError("initial objective is not finite");
  res.policy = open_loop_policy(actions, dyn.n_x);
  for (int k = 0; k < horizon; ++k) res.policy.steps[static_cast<std::size_t>(k)].x_anchor = res.nominal.x_mean(k);
  res.history.push_back({0, J, 0.0, opts.reg0, ms_since(t0)});

  double lambda = opts.reg0;
  int failures = 0;
  auto escalate = [&] { lambda = std::min(lambda == 0.0 ? 1e-6 : 10.0 * lambda, kLambdaCap); };
  for (int it = 1; it <= opts.max_iters && horizon > 0; ++it) {
    t0 = Clock::now();
    BackwardResult br;
    try {
      br = backward_pass(res.nominal, dyn, costs, opts, lambda);
    } catch (const IllConditionedQ&) {
      escalate();
      res.history.push_back({it, J, 0.0, lambda, ms_since(t0)});
      if (++failures >= kMaxFailures) {
        res.stalled = true;
        break;
      }
      continue;
    }

    // Backtrack on the feedforward term first. If no step helps, sweep again
    // blending the feedback gain from the previous policy as well: a gain
    // taken from a nonconvex local model can inflate the propagated
    // covariance even when the feedforward step is tiny.
    bool accepted = false;
    bool full_step = false;
    double alpha = 1.0;
    double first_rel = std::numeric_limits<double>::infinity();
    NominalTrajectory cand;
    Policy trial;
    double Jc = 0.0;
    for (int sweep = 0; sweep < 2 && !accepted; ++sweep) {
      alpha = 1.0;
      for (int ls = 0; ls < opts.line_search_steps; ++ls, alpha *= 0.5) {
        trial = blend(br.policy, res.policy, alpha, sweep == 0 ? 1.0 : alpha);
        try {
          cand = forward_pass(trial, dyn, costs, init, opts);
          Jc = stochastic_objective(cand, costs, dyn, opts);
        } catch (const NumericalError&) {
          continue;
        }
        if (!std::isfinite(Jc)) continue;
        if (sweep == 0 && ls == 0) first_rel = std::abs(J - Jc) / std::max(J, 1e-9);
        if (Jc < J) {
          accepted = true;
          full_step = sweep == 0 && ls == 0;
          break;
        }
      }
    }

    if (accepted) {
      const double rel = (J - Jc) / std::max(J, 1e-9);
      J = Jc;
      res.nominal = std::move(cand);
      res.policy = std::move(trial);
      failures = 0;
      res.history.push_back({it, J, alpha, br.max_lambda, ms_since(t0)});
      // Only a full step that barely moves the objective signals convergence;
      // a tiny backtracked step says nothing about stationarity.
      if (rel < opts.tol && full_step) {
        res.converged = true;
        break;
      }
      if (rel >= opts.tol) ++res.iterations;
      if (lambda > opts.reg0) lambda = lambda / 10.0 < 1e-8 ? opts.reg0 : std::max(lambda / 10.0, opts.reg0);
      continue;
    }
    if (first_rel < opts.tol) {
      res.history.push_back({it, J, 0.0, br.max_lambda, ms_since(t0)});
      res.converged = true;
      break;
    }
    lambda = std::max(lambda, br.max_lambda);
    escalate();
    res.history.push_back({it, J, 0.0, lambda, ms_since(t0)});
    if (++failures >= kMaxFailures) {
      res.stalled = true;
      break;
    }
  }
  return res;
}

}  // namespace dualmpc
