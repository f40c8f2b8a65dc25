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

#include "dualmpc/objective.hpp"

#include <cmath>

#include "dualmpc/errors.hpp"

namespace dualmpc {

using Eigen::VectorXd;

void QuadraticCostSpec::validate() const {
  const auto nx = W.rows();
  if (W.cols() != nx || W_H.rows() != nx || W_H.cols() != nx || R.rows() != R.cols())
    throw ConfigError("cost weights have inconsistent shapes");
  auto sym = [](const Eigen::MatrixXd& m) { return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12; };
  if (!sym(W) || !sym(W_H) || !sym(R)) throw ConfigError("cost weights must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(W), eh(W_H), er(R);
  if (ew.eigenvalues().minCoeff() < -1e-12 || eh.eigenvalues().minCoeff() < -1e-12)
    throw ConfigError("W and W_H must be positive semidefinite");
  if (R.rows() > 0 && er.eigenvalues().minCoeff() <= 0.0) throw ConfigError("R must be positive definite");
  if (!reference) throw ConfigError("cost has no reference trajectory");
}

double stage_cost(const QuadraticCostSpec& spec, const VectorXd& xi, int k) {
  const auto nx = spec.state_dim();
  const auto nu = spec.action_dim();
  if (xi.size() != nx + nu) throw DimensionError("stage_cost: dimension mismatch");
  const VectorXd dx = xi.head(nx) - spec.reference(k);
  const VectorXd u = xi.tail(nu);
  return dx.dot(spec.W * dx) + u.dot(spec.R * u);
}

double terminal_cost(const QuadraticCostSpec& spec, const VectorXd& x, int k) {
  if (x.size() != spec.state_dim()) throw DimensionError("terminal_cost: dimension mismatch");
  const VectorXd dx = x - spec.reference(k);
  return dx.dot(spec.W_H * dx);
}

std::string to_string(ExplorationMode mode) {
  switch (mode) {
    case ExplorationMode::kOff: return "off";
    case ExplorationMode::kFull: return "full";
    case ExplorationMode::kParametric: return "parametric";
  }
  return "off";
}

ExplorationMode exploration_mode_from_string(const std::string& name) {
  if (name == "off") return ExplorationMode::kOff;
  if (name == "full") return ExplorationMode::kFull;
  if (name == "parametric") return ExplorationMode::kParametric;
  throw ConfigError("unknown exploration mode '" + name + "'");
}

double exploration_offset(const ModelGP& model, ExplorationMode mode) {
  double acc = 0.0;
  for (const auto& sub : model.subsystems) {
    if (mode == ExplorationMode::kParametric) {
      if (sub.basis.n_theta() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub.prior.cov, Eigen::EigenvaluesOnly);
      const double pb = sub.basis.bound();
      acc += std::log1p(es.eigenvalues().maxCoeff() * pb * pb);
    } else {
      acc += std::log1p(variance_bound(sub) / sub.kernel.noise);
    }
  }
  return 0.5 * acc;
}

ExplorationSpec make_exploration(const ModelGP& model, double gamma, ExplorationMode mode) {
  if (!(gamma >= 0.0)) throw ConfigError("exploration weight gamma must be non-negative");
  ExplorationSpec spec{gamma, mode, 0.0};
  if (mode != ExplorationMode::kOff) spec.offset = exploration_offset(model, mode);
  return spec;
}

double exploration_cost_from_variances(const ModelGP& model, const VectorXd& predictive_var) {
  if (predictive_var.size() != model.state_dim())
    throw DimensionError("exploration_cost: one variance per output dimension");
  double acc = 0.0;
  for (int i = 0; i < model.state_dim(); ++i) {
    const double noise = model.subsystems[static_cast<std::size_t>(i)].kernel.noise;
    const double latent = std::max(predictive_var(i) - noise, 0.0);
    acc += std::log1p(latent / noise);
  }
  return -0.5 * acc;
}

double exploration_cost(const ModelGP& model, const VectorXd& xi, ExplorationMode mode) {
  switch (mode) {
    case ExplorationMode::kOff:
      throw Error("exploration_cost called with exploration switched off");
    case ExplorationMode::kFull:
      return exploration_cost_from_variances(model, model.predict(xi).cov.diagonal());
    case ExplorationMode::kParametric: {
      double acc = 0.0;
      for (const auto& sub : model.subsystems) {
        if (sub.basis.n_theta() == 0) continue;
        const VectorXd phi = basis_eval(sub.basis, xi);
        acc += std::log1p(phi.dot(sub.theta_cov * phi));
      }
      return -0.5 * acc;
    }
  }
  return 0.0;
}

double efe_stage_cost(const QuadraticCostSpec& spec, const ExplorationSpec& expl, const ModelGP& model,
                      const VectorXd& xi, int k) {
  const double c = stage_cost(spec, xi, k);
  if (!expl.active()) return c;
  return c + expl.gamma * (exploration_cost(model, xi, expl.mode) + expl.offset);
}

}  // namespace dualmpc
