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

// Simulated plants: pendulum, scalar toy system and a 6-DoF vehicle.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace dualmpc {

using DerivFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;

struct PlantSpec {
  std::string name;
  int n_x = 0;
  int n_u = 0;
  double dt = 0.1;
  std::map<std::string, double> params;
  Eigen::MatrixXd process_noise;
  std::optional<Eigen::MatrixXd> action_bounds;  // n_u x 2, columns lo and hi

  double param(const std::string& key) const;
  void validate() const;
};

PlantSpec pendulum_spec();
PlantSpec scalar_toy_spec();
PlantSpec vehicle_spec();
/// One of "pendulum", "scalar_toy", "vehicle".
PlantSpec plant_spec(const std::string& name);

/// Classical RK4 with u held over the step.
Eigen::VectorXd rk4_step(const DerivFn& deriv, const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt);

Eigen::VectorXd pendulum_deriv(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const PlantSpec& spec);

double scalar_toy_drift(double x);
Eigen::VectorXd scalar_toy_deriv(const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Dynamic bicycle model with linear tires. The longitudinal speed used in the
/// slip angles is floored at `vx_min`; each floor hit bumps a global counter.
Eigen::VectorXd vehicle6dof_deriv(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const PlantSpec& spec);
std::uint64_t vehicle_clamp_count();
void reset_vehicle_clamp_count();

DerivFn plant_deriv(const PlantSpec& spec);

/// Noise-free discrete step (actions clipped to the bounds when present).
Eigen::VectorXd plant_step(const PlantSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

Eigen::VectorXd clip_action(const PlantSpec& spec, const Eigen::VectorXd& u);

/// Seeded N(0, Sigma_f) sampler.
class NoiseStream {
 public:
  NoiseStream(const Eigen::MatrixXd& cov, std::uint64_t seed);
  Eigen::VectorXd sample();
  std::uint64_t next_u64();
  double uniform(double lo, double hi);

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Returns the (T + 1) x n_x state trajectory for T = actions.rows().
Eigen::MatrixXd simulate(const PlantSpec& spec, const Eigen::VectorXd& x0, const Eigen::MatrixXd& actions,
                         std::uint64_t seed);

}  // namespace dualmpc
