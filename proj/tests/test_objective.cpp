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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dualmpc/errors.hpp"
#include "dualmpc/objective.hpp"
#include "test_util.hpp"

namespace dualmpc {
namespace {

QuadraticCostSpec spec2() {
  QuadraticCostSpec c;
  c.W = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  c.R = MatrixXd::Constant(1, 1, 0.5);
  c.W_H = 10.0 * MatrixXd::Identity(2, 2);
  c.reference = [](int k) { return Eigen::Vector2d(0.1 * k, 0.0); };
  return c;
}

TEST(Cost, StageAndTerminalValues) {
  const auto c = spec2();
  c.validate();
  EXPECT_DOUBLE_EQ(stage_cost(c, Eigen::Vector3d(1.0, 1.0, 2.0), 0), 1.0 + 2.0 + 2.0);
  EXPECT_DOUBLE_EQ(stage_cost(c, Eigen::Vector3d(1.0, 0.0, 0.0), 10), 0.0);
  EXPECT_DOUBLE_EQ(terminal_cost(c, Eigen::Vector2d(0.0, 1.0), 0), 10.0);
}

TEST(Cost, RejectsIndefiniteR) {
  auto c = spec2();
  c.R(0, 0) = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

ModelGP toy_model(double noise) {
  std::mt19937_64 rng(3);
  KernelParams k;
  k.amplitude = 2.0;
  k.w_diag = VectorXd::Constant(2, 0.3);
  k.noise = noise;
  const MatrixXd x = testing::uniform_matrix(rng, 2, 8, -1.0, 1.0);
  ModelGP m;
  const auto basis = BasisSpec::linear(2);
  m.subsystems.push_back(
      batch_fit(x, x.row(0).transpose(), k, basis, ParametricPrior::isotropic(basis.n_theta(), 1.0), 8));
  return m;
}

TEST(Exploration, FarFromDataReachesOffsetAndNearDataIsSmall) {
  const auto m = toy_model(1e-3);
  const auto e = make_exploration(m, 5.0, ExplorationMode::kFull);
  const double far = exploration_cost(m, Eigen::Vector2d(50.0, 50.0), ExplorationMode::kFull);
  const double near = exploration_cost(m, m.subsystems[0].pool.col(0), ExplorationMode::kFull);
  EXPECT_LT(far, near);
  EXPECT_GE(far, -e.offset);
  EXPECT_LE(near, 0.0);
}

TEST(Exploration, ParametricModeStaysInRange) {
  const auto m = toy_model(1e-2);
  const auto e = make_exploration(m, 1.0, ExplorationMode::kParametric);
  std::mt19937_64 rng(4);
  const MatrixXd probes = testing::uniform_matrix(rng, 2, 200, -20.0, 20.0);
  for (int j = 0; j < probes.cols(); ++j) {
    const double c = exploration_cost(m, probes.col(j), ExplorationMode::kParametric);
    EXPECT_LE(c, 0.0);
    EXPECT_GE(c, -e.offset);
  }
}

TEST(Exploration, EfeAddsWeightedShiftedTerm) {
  const auto m = toy_model(1e-2);
  QuadraticCostSpec c;
  c.W = MatrixXd::Identity(1, 1);
  c.R = MatrixXd::Identity(1, 1);
  c.W_H = c.W;
  c.reference = [](int) { return VectorXd::Zero(1); };
  const Eigen::Vector2d xi(0.3, -0.2);
  const auto off = make_exploration(m, 0.0, ExplorationMode::kOff);
  EXPECT_DOUBLE_EQ(efe_stage_cost(c, off, m, xi, 0), stage_cost(c, xi, 0));
  const auto on = make_exploration(m, 5.0, ExplorationMode::kFull);
  EXPECT_NEAR(efe_stage_cost(c, on, m, xi, 0),
              stage_cost(c, xi, 0) + 5.0 * (exploration_cost(m, xi, ExplorationMode::kFull) + on.offset), 1e-14);
  EXPECT_THROW(make_exploration(m, -1.0, ExplorationMode::kFull), ConfigError);
}

}  // namespace
}  // namespace dualmpc
