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

#include "dualmpc/plants.hpp"

#include <atomic>
#include <cmath>
#include <random>

#include "dualmpc/errors.hpp"
#include "dualmpc/gaussmath.hpp"

namespace dualmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
std::atomic<std::uint64_t> g_vehicle_clamps{0};
}

double PlantSpec::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw ConfigError("plant '" + name + "' has no parameter '" + key + "'");
  return it->second;
}

void PlantSpec::validate() const {
  if (n_x < 1 || n_u < 1) throw ConfigError("plant dimensions must be positive");
  if (!(dt > 0.0)) throw ConfigError("plant dt must be positive");
  if (process_noise.rows() != n_x || process_noise.cols() != n_x)
    throw ConfigError("process noise must be n_x x n_x");
  if ((process_noise - process_noise.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("process noise must be symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(process_noise, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) throw ConfigError("process noise must be positive semidefinite");
  if (action_bounds) {
    if (action_bounds->rows() != n_u || action_bounds->cols() != 2) throw ConfigError("action bounds must be n_u x 2");
    if ((action_bounds->col(0).array() > action_bounds->col(1).array()).any())
      throw ConfigError("action lower bound exceeds upper bound");
  }
}

PlantSpec pendulum_spec() {
  PlantSpec s;
  s.name = "pendulum";
  s.n_x = 2;
  s.n_u = 1;
  s.params = {{"m", 1.0}, {"l", 1.0}, {"g", 9.81}, {"b", 0.1}};
  s.process_noise = 1e-4 * MatrixXd::Identity(2, 2);
  return s;
}

PlantSpec scalar_toy_spec() {
  PlantSpec s;
  s.name = "scalar_toy";
  s.n_x = 1;
  s.n_u = 1;
  s.process_noise = 1e-3 * MatrixXd::Identity(1, 1);
  return s;
}

PlantSpec vehicle_spec() {
  PlantSpec s;
  s.name = "vehicle";
  s.n_x = 6;
  s.n_u = 2;
  s.params = {{"m", 1500.0}, {"Iz", 2500.0}, {"lf", 1.2},     {"lr", 1.4},
              {"Cf", 8e4},   {"Cr", 8e4},    {"Fmax", 5e3},  {"vx_min", 0.1}};
  s.process_noise = 1e-4 * MatrixXd::Identity(6, 6);
  return s;
}

PlantSpec plant_spec(const std::string& name) {
  if (name == "pendulum") return pendulum_spec();
  if (name == "scalar_toy") return scalar_toy_spec();
  if (name == "vehicle") return vehicle_spec();
  throw ConfigError("unknown plant '" + name + "'");
}

VectorXd rk4_step(const DerivFn& deriv, const VectorXd& x, const VectorXd& u, double dt) {
  const VectorXd k1 = deriv(x, u);
  const VectorXd k2 = deriv(x + 0.5 * dt * k1, u);
  const VectorXd k3 = deriv(x + 0.5 * dt * k2, u);
  const VectorXd k4 = deriv(x + dt * k3, u);
  VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw DivergenceError("integration produced a non-finite state");
  return next;
}

VectorXd pendulum_deriv(const VectorXd& x, const VectorXd& u, const PlantSpec& spec) {
  const double m = spec.param("m"), l = spec.param("l"), g = spec.param("g"), b = spec.param("b");
  VectorXd d(2);
  d << x(1), (u(0) - b * x(1) - m * g * l * std::sin(x(0))) / (m * l * l);
  return d;
}

double scalar_toy_drift(double x) {
  return std::tanh(1.0 + 0.05 * x - 0.5 * x * x) + 0.6 * std::sin(4.0 * x) +
         0.3 * std::sin(10.0 * x + 0.5) * std::exp(-0.05 * x) - 0.14;
}

VectorXd scalar_toy_deriv(const VectorXd& x, const VectorXd& u) {
  VectorXd d(1);
  d << scalar_toy_drift(x(0)) + u(0);
  return d;
}

VectorXd vehicle6dof_deriv(const VectorXd& x, const VectorXd& u, const PlantSpec& spec) {
  const double m = spec.param("m"), iz = spec.param("Iz"), lf = spec.param("lf"), lr = spec.param("lr");
  const double cf = spec.param("Cf"), cr = spec.param("Cr"), fmax = spec.param("Fmax");
  const double vx_min = spec.param("vx_min");
  const double psi = x(2), vx = x(3), vy = x(4), w = x(5);
  const double delta = u(0);
  double vx_t = vx;
  if (vx_t < vx_min) {
    vx_t = vx_min;
    g_vehicle_clamps.fetch_add(1, std::memory_order_relaxed);
  }
  const double alpha_f = std::atan((vy + lf * w) / vx_t) - delta;
  const double alpha_r = std::atan((vy - lr * w) / vx_t);
  const double fyf = -cf * alpha_f;
  const double fyr = -cr * alpha_r;
  const double fxf = u(1) * fmax;
  const double cd = std::cos(delta), sd = std::sin(delta);
  VectorXd d(6);
  d(0) = vx * std::cos(psi) - vy * std::sin(psi);
  d(1) = vx * std::sin(psi) + vy * std::cos(psi);
  d(2) = w;
  d(3) = (fxf * cd - fyf * sd) / m + vy * w;
  d(4) = (fxf * sd + fyf * cd + fyr) / m - vx * w;
  d(5) = (lf * (fxf * sd + fyf * cd) - lr * fyr) / iz;
  return d;
}

std::uint64_t vehicle_clamp_count() { return g_vehicle_clamps.load(); }
void reset_vehicle_clamp_count() { g_vehicle_clamps.store(0); }

DerivFn plant_deriv(const PlantSpec& spec) {
  if (spec.name == "pendulum") return [spec](const VectorXd& x, const VectorXd& u) { return pendulum_deriv(x, u, spec); };
  if (spec.name == "scalar_toy") return scalar_toy_deriv;
  if (spec.name == "vehicle")
    return [spec](const VectorXd& x, const VectorXd& u) { return vehicle6dof_deriv(x, u, spec); };
  throw ConfigError("unknown plant '" + spec.name + "'");
}

VectorXd clip_action(const PlantSpec& spec, const VectorXd& u) {
  if (!spec.action_bounds) return u;
  return u.cwiseMax(spec.action_bounds->col(0)).cwiseMin(spec.action_bounds->col(1));
}

VectorXd plant_step(const PlantSpec& spec, const VectorXd& x, const VectorXd& u) {
  if (x.size() != spec.n_x || u.size() != spec.n_u) throw DimensionError("plant_step: dimension mismatch");
  return rk4_step(plant_deriv(spec), x, clip_action(spec, u), spec.dt);
}

struct NoiseStream::Impl {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};
  MatrixXd lower;
  bool zero = false;
};

NoiseStream::NoiseStream(const MatrixXd& cov, std::uint64_t seed) : impl_(std::make_shared<Impl>()) {
  impl_->rng.seed(seed);
  impl_->zero = cov.size() == 0 || cov.cwiseAbs().maxCoeff() == 0.0;
  impl_->lower = impl_->zero ? MatrixXd::Zero(cov.rows(), cov.cols()) : chol_psd(cov).lower;
}

VectorXd NoiseStream::sample() {
  const auto n = impl_->lower.rows();
  if (impl_->zero) return VectorXd::Zero(n);
  VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = impl_->normal(impl_->rng);
  return impl_->lower * z;
}

std::uint64_t NoiseStream::next_u64() { return impl_->rng(); }

double NoiseStream::uniform(double lo, double hi) {
  // Explicit mapping keeps the stream identical across standard libraries.
  const double r = static_cast<double>(impl_->rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * r;
}

MatrixXd simulate(const PlantSpec& spec, const VectorXd& x0, const MatrixXd& actions, std::uint64_t seed) {
  spec.validate();
  if (x0.size() != spec.n_x || actions.cols() != spec.n_u) throw DimensionError("simulate: dimension mismatch");
  NoiseStream noise(spec.process_noise, seed);
  MatrixXd traj(actions.rows() + 1, spec.n_x);
  traj.row(0) = x0.transpose();
  VectorXd x = x0;
  for (Eigen::Index t = 0; t < actions.rows(); ++t) {
    x = plant_step(spec, x, actions.row(t).transpose()) + noise.sample();
    if (!x.allFinite()) throw DivergenceError("simulation diverged");
    traj.row(t + 1) = x.transpose();
  }
  return traj;
}

}  // namespace dualmpc
