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

#include "dualmpc/errors.hpp"
#include "dualmpc/plants.hpp"

namespace dualmpc {
namespace {

using Eigen::VectorXd;

TEST(Rk4, ExponentialGrowth) {
  const auto x = rk4_step([](const VectorXd& s, const VectorXd&) { return s; }, VectorXd::Ones(1),
                          VectorXd::Zero(1), 0.1);
  EXPECT_NEAR(x(0), std::exp(0.1), 1e-7);
}

TEST(Rk4, ConstantInputIsExact) {
  const auto x = rk4_step([](const VectorXd&, const VectorXd& u) { return u; }, VectorXd::Constant(1, 2.0),
                          VectorXd::Constant(1, 3.0), 0.1);
  EXPECT_DOUBLE_EQ(x(0), 2.0 + 0.3);
}

TEST(Rk4, NonFiniteStateIsDivergence) {
  EXPECT_THROW(rk4_step([](const VectorXd& s, const VectorXd&) { return VectorXd::Constant(s.size(), NAN); },
                        VectorXd::Zero(1), VectorXd::Zero(1), 0.1),
               DivergenceError);
}

TEST(Pendulum, Equilibria) {
  const auto s = pendulum_spec();
  EXPECT_EQ(pendulum_deriv(VectorXd::Zero(2), VectorXd::Zero(1), s).norm(), 0.0);
  EXPECT_NEAR(pendulum_deriv(Eigen::Vector2d(M_PI, 0.0), VectorXd::Zero(1), s).norm(), 0.0, 1e-14);
  EXPECT_NEAR(pendulum_deriv(Eigen::Vector2d(M_PI / 2, 0.0), VectorXd::Zero(1), s)(1), -9.81, 1e-12);
  EXPECT_EQ(plant_step(s, VectorXd::Zero(2), VectorXd::Zero(1)).norm(), 0.0);
}

TEST(Pendulum, Rk4IsFourthOrder) {
  const auto s = pendulum_spec();
  const auto f = plant_deriv(s);
  const VectorXd x0 = Eigen::Vector2d(1.0, 0.0);
  const VectorXd u = VectorXd::Constant(1, 0.5);
  auto integrate = [&](double dt, double T) {
    VectorXd x = x0;
    const int n = static_cast<int>(std::lround(T / dt));
    for (int i = 0; i < n; ++i) x = rk4_step(f, x, u, dt);
    return x;
  };
  const VectorXd ref = integrate(1e-5, 2.0);
  const double e1 = (integrate(0.1, 2.0) - ref).norm();
  const double e2 = (integrate(0.05, 2.0) - ref).norm();
  EXPECT_GE(e1 / e2, 8.0);
  EXPECT_LE(e1 / e2, 32.0);
}

TEST(Pendulum, UndampedConservesEnergy) {
  auto s = pendulum_spec();
  s.params["b"] = 0.0;
  const auto f = plant_deriv(s);
  auto energy = [&](const VectorXd& x) { return 0.5 * x(1) * x(1) + 9.81 * (1.0 - std::cos(x(0))); };
  VectorXd x = Eigen::Vector2d(1.0, 0.0);
  const double e0 = energy(x);
  for (int i = 0; i < 1000; ++i) x = rk4_step(f, x, VectorXd::Zero(1), 0.01);
  EXPECT_LE(std::abs(energy(x) - e0) / e0, 1e-4);
}

TEST(ScalarToy, DriftValueAndAdditiveControl) {
  EXPECT_NEAR(scalar_toy_drift(0.0), 0.76542, 1e-5);
  const VectorXd x = VectorXd::Constant(1, 1.3);
  EXPECT_DOUBLE_EQ(scalar_toy_deriv(x, VectorXd::Constant(1, 0.7))(0) - scalar_toy_deriv(x, VectorXd::Zero(1))(0),
                   0.7);
  for (double v = -5.0; v <= 5.0; v += 0.01) EXPECT_LE(std::abs(scalar_toy_drift(v)), 2.0);
}

TEST(ScalarToy, UnforcedTrajectoryStaysBounded) {
  const auto traj = simulate(scalar_toy_spec(), VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Zero(40, 1), 5);
  EXPECT_LE(traj.cwiseAbs().maxCoeff(), 10.0);
}

TEST(Vehicle, StraightDriving) {
  VectorXd x(6);
  x << 0, 0, 0, 10, 0, 0;
  const VectorXd d = vehicle6dof_deriv(x, VectorXd::Zero(2), vehicle_spec());
  VectorXd want(6);
  want << 10, 0, 0, 0, 0, 0;
  EXPECT_LE((d - want).norm(), 1e-12);
}

TEST(Vehicle, LateralVelocityGivesRestoringForce) {
  VectorXd x(6);
  x << 0, 0, 0, 10, 1, 0;
  const VectorXd d = vehicle6dof_deriv(x, VectorXd::Zero(2), vehicle_spec());
  EXPECT_NEAR(d(3), 0.0, 1e-12);
  EXPECT_LT(d(4), 0.0);
}

TEST(Vehicle, LongitudinalForce) {
  VectorXd x(6);
  x << 0, 0, 0, 1, 0, 0;
  const VectorXd d = vehicle6dof_deriv(x, Eigen::Vector2d(0.0, 0.3), vehicle_spec());
  EXPECT_NEAR(d(3), 1.0, 1e-12);
}

TEST(Vehicle, LateralPerturbationDecays) {
  auto s = vehicle_spec();
  VectorXd x(6);
  x << 0, 0, 0, 10, 0.5, 0.2;
  for (int i = 0; i < 50; ++i) x = plant_step(s, x, VectorXd::Zero(2));
  EXPECT_LT(std::abs(x(4)), 0.05);
  EXPECT_LT(std::abs(x(5)), 0.05);
}

TEST(Vehicle, SlowSpeedIsClampedAndCounted) {
  reset_vehicle_clamp_count();
  VectorXd x(6);
  x << 0, 0, 0, 0.0, 0.1, 0;
  const VectorXd d = vehicle6dof_deriv(x, VectorXd::Zero(2), vehicle_spec());
  EXPECT_TRUE(d.allFinite());
  EXPECT_EQ(vehicle_clamp_count(), 1u);
}

TEST(Simulate, SeededAndNoiseFreeRepeatable) {
  auto s = pendulum_spec();
  const Eigen::MatrixXd u = Eigen::MatrixXd::Constant(30, 1, 0.4);
  const auto a = simulate(s, VectorXd::Zero(2), u, 9);
  const auto b = simulate(s, VectorXd::Zero(2), u, 9);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == simulate(s, VectorXd::Zero(2), u, 10));
  s.process_noise.setZero();
  EXPECT_TRUE(simulate(s, VectorXd::Zero(2), u, 1) == simulate(s, VectorXd::Zero(2), u, 2));
}

TEST(PlantSpec, Validation) {
  auto s = pendulum_spec();
  s.dt = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(plant_spec("boat"), ConfigError);
}

}  // namespace
}  // namespace dualmpc
